#include "mcse/adam.hpp"

#include <cmath>

#include "mcse/common.hpp"

namespace mcse {

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

double Adam::step() {
  double sq = 0.0;
  for (const Param* p : params_) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  const double scale =
      (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const Eigen::MatrixXd g = scale * params_[i]->grad;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    params_[i]->value.array() -=
        cfg_.lr * (m_[i] / bc1).array() /
        ((v_[i] / bc2).cwiseSqrt().array() + cfg_.eps);
  }
  return norm;
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

}  // namespace mcse
