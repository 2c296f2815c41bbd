#include "mcse/cldnn.hpp"

#include "mcse/common.hpp"

namespace mcse {

CldnnAm::CldnnAm(const CldnnConfig& cfg, uint64_t seed) : cfg_(cfg) {
  std::mt19937_64 rng(derive_seed(seed, 0xc1d));
  conv1_ = Conv2d("am.conv1", 1, cfg.conv1_maps, 3, 3, 2, 2, 1, 1, rng);
  conv2_ = Conv2d("am.conv2", cfg.conv1_maps, cfg.conv2_maps, 3, 3, 2, 2, 1, 1, rng);
  const int f1 = Conv2d::out_extent(cfg.num_mels, 3, 2, 1);
  freq_out_ = Conv2d::out_extent(f1, 3, 2, 1);
  const int lstm_in = cfg.conv2_maps * freq_out_;
  for (int l = 0; l < cfg.lstm_layers; ++l)
    lstms_.emplace_back("am.lstm" + std::to_string(l),
                        l == 0 ? lstm_in : cfg.lstm_hidden, cfg.lstm_hidden, rng);
  fc1_ = Linear("am.fc1", cfg.lstm_hidden, cfg.lstm_hidden, rng);
  fc2_ = Linear("am.fc2", cfg.lstm_hidden, cfg.num_classes(), rng);
}

long CldnnAm::out_frames(long lfb_frames) const {
  const long t1 = Conv2d::out_extent(static_cast<int>(lfb_frames), 3, 2, 1);
  return Conv2d::out_extent(static_cast<int>(t1), 3, 2, 1);
}

Eigen::MatrixXd CldnnAm::forward(const Eigen::MatrixXd& lfb) {
  if (lfb.rows() != cfg_.num_mels) throw DataError("acoustic model: bad feature dim");
  const long T = lfb.cols();
  const Eigen::MatrixXd norm = cmvn_.forward(lfb);

  Image im;
  im.height = cfg_.num_mels;
  im.width = static_cast<int>(T);
  im.maps.resize(1, static_cast<long>(im.height) * im.width);
  for (int h = 0; h < im.height; ++h)
    for (int t = 0; t < im.width; ++t)
      im.maps(0, static_cast<long>(h) * im.width + t) = norm(h, t);

  Image c1 = conv1_.forward(im);
  c1.maps = relu1_.forward(c1.maps);
  Image c2 = conv2_.forward(c1);
  c2.maps = relu2_.forward(c2.maps);

  // [maps x (freq*time)] -> frame matrix [maps*freq x time]
  const int Tc = c2.width;
  Eigen::MatrixXd frames(cfg_.conv2_maps * freq_out_, Tc);
  for (int c = 0; c < cfg_.conv2_maps; ++c)
    for (int h = 0; h < freq_out_; ++h)
      for (int t = 0; t < Tc; ++t)
        frames(c * freq_out_ + h, t) = c2.maps(c, static_cast<long>(h) * Tc + t);

  Eigen::MatrixXd hseq = frames;
  for (auto& l : lstms_) hseq = l.forward(hseq);
  hseq = fc1_.forward(hseq);
  hseq = relu3_.forward(hseq);
  hseq = fc2_.forward(hseq);
  return logsoftmax_.forward(hseq);
}

Eigen::MatrixXd CldnnAm::backward(const Eigen::MatrixXd& grad_logp) {
  Eigen::MatrixXd g = logsoftmax_.backward(grad_logp);
  g = fc2_.backward(g);
  g = relu3_.backward(g);
  g = fc1_.backward(g);
  for (auto it = lstms_.rbegin(); it != lstms_.rend(); ++it) g = it->backward(g);

  const int Tc = static_cast<int>(g.cols());
  Image gc2;
  gc2.height = freq_out_;
  gc2.width = Tc;
  gc2.maps.resize(cfg_.conv2_maps, static_cast<long>(freq_out_) * Tc);
  for (int c = 0; c < cfg_.conv2_maps; ++c)
    for (int h = 0; h < freq_out_; ++h)
      for (int t = 0; t < Tc; ++t)
        gc2.maps(c, static_cast<long>(h) * Tc + t) = g(c * freq_out_ + h, t);

  gc2.maps = relu2_.backward(gc2.maps);
  Image gc1 = conv2_.backward(gc2);
  gc1.maps = relu1_.backward(gc1.maps);
  Image gin = conv1_.backward(gc1);

  Eigen::MatrixXd gnorm(cfg_.num_mels, gin.width);
  for (int h = 0; h < gin.height; ++h)
    for (int t = 0; t < gin.width; ++t)
      gnorm(h, t) = gin.maps(0, static_cast<long>(h) * gin.width + t);
  return cmvn_.backward(gnorm);
}

std::vector<Param*> CldnnAm::params() {
  std::vector<Param*> out;
  conv1_.collect(out);
  conv2_.collect(out);
  for (auto& l : lstms_) l.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
  return out;
}

}  // namespace mcse
