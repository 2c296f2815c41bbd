#pragma once

#include <vector>

#include "mcse/nn_layers.hpp"

namespace mcse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
};

class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);

  /// Clips the global gradient norm, applies one update, and returns the
  /// pre-clip norm.
  double step();
  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace mcse
