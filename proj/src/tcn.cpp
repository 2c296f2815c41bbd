#include "mcse/tcn.hpp"

#include "mcse/common.hpp"

namespace mcse {

TcnBlock::TcnBlock(const std::string& name, const TcnConfig& cfg, int dilation,
                   std::mt19937_64& rng)
    : expand(name + ".expand", cfg.bottleneck, cfg.hidden, rng),
      act1(name + ".act1", cfg.hidden),
      norm1(name + ".norm1", cfg.hidden),
      dconv(name + ".dconv", cfg.hidden, 3, dilation, rng),
      act2(name + ".act2", cfg.hidden),
      norm2(name + ".norm2", cfg.hidden),
      project(name + ".project", cfg.hidden, cfg.bottleneck, rng) {}

Eigen::MatrixXd TcnBlock::forward(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = expand.forward(x);
  h = act1.forward(h);
  h = norm1.forward(h);
  h = dconv.forward(h);
  h = act2.forward(h);
  h = norm2.forward(h);
  h = project.forward(h);
  return x + h;
}

Eigen::MatrixXd TcnBlock::backward(const Eigen::MatrixXd& gy) {
  Eigen::MatrixXd g = project.backward(gy);
  g = norm2.backward(g);
  g = act2.backward(g);
  g = dconv.backward(g);
  g = norm1.backward(g);
  g = act1.backward(g);
  g = expand.backward(g);
  return gy + g;
}

void TcnBlock::collect(std::vector<Param*>& out) {
  expand.collect(out);
  act1.collect(out);
  norm1.collect(out);
  dconv.collect(out);
  act2.collect(out);
  norm2.collect(out);
  project.collect(out);
}

TcnMaskNet::TcnMaskNet(const TcnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  std::mt19937_64 rng(derive_seed(seed, 0x7c17));
  input_ = Linear("tcn.input", cfg.input_dim, cfg.bottleneck, rng);
  for (int r = 0; r < cfg.repeats; ++r)
    for (int x = 0; x < cfg.blocks_per_repeat; ++x)
      blocks_.emplace_back("tcn.r" + std::to_string(r) + ".b" + std::to_string(x),
                           cfg, 1 << x, rng);
  const int head_out =
      cfg.mask_kind == MaskKind::Irm ? cfg.num_bins : 2 * cfg.num_bins;
  head_ = Linear("tcn.head", cfg.bottleneck, head_out, rng);
  // Start near the identity mask: unit real part, zero imaginary part.
  head_.b.value.setZero();
  head_.b.value.block(0, 0, cfg.num_bins, 1).setOnes();
}

Eigen::MatrixXd TcnMaskNet::forward(const Eigen::MatrixXd& features) {
  if (features.rows() != cfg_.input_dim)
    throw DataError("mask net: unexpected feature dimension");
  Eigen::MatrixXd h = input_.forward(features);
  for (auto& blk : blocks_) h = blk.forward(h);
  h = head_.forward(h);
  if (cfg_.mask_kind == MaskKind::Irm) h = head_relu_.forward(h);
  return h;
}

Eigen::MatrixXd TcnMaskNet::backward(const Eigen::MatrixXd& grad_raw) {
  Eigen::MatrixXd g = grad_raw;
  if (cfg_.mask_kind == MaskKind::Irm) g = head_relu_.backward(g);
  g = head_.backward(g);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
  return input_.backward(g);
}

Eigen::MatrixXcd TcnMaskNet::to_complex_mask(const Eigen::MatrixXd& raw) const {
  const int F = cfg_.num_bins;
  if (raw.rows() != 2 * F) throw DataError("raw mask is not complex-shaped");
  Eigen::MatrixXcd m(F, raw.cols());
  m.real() = raw.topRows(F);
  m.imag() = raw.bottomRows(F);
  return m;
}

Eigen::MatrixXd TcnMaskNet::complex_grad_to_raw(const Eigen::MatrixXcd& grad_mask) const {
  const int F = cfg_.num_bins;
  if (grad_mask.rows() != F) throw DataError("complex mask grad shape mismatch");
  Eigen::MatrixXd g(2 * F, grad_mask.cols());
  g.topRows(F) = grad_mask.real();
  g.bottomRows(F) = grad_mask.imag();
  return g;
}

std::vector<Param*> TcnMaskNet::params() {
  std::vector<Param*> out;
  input_.collect(out);
  for (auto& blk : blocks_) blk.collect(out);
  head_.collect(out);
  return out;
}

}  // namespace mcse
