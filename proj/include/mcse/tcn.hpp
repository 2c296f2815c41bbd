#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mcse/nn_layers.hpp"

namespace mcse {

enum class MaskKind { Irm, Cirm };

struct TcnConfig {
  int input_dim = 2056;   // (LPS + 6 IPD + AF) * 257
  int num_bins = 257;
  int bottleneck = 64;    // residual channel width
  int hidden = 128;       // depthwise channel width
  int blocks_per_repeat = 4;  // dilations 1,2,4,...
  int repeats = 2;
  MaskKind mask_kind = MaskKind::Cirm;
};

/// One dilated depthwise-separable residual block.
struct TcnBlock {
  TcnBlock() = default;
  TcnBlock(const std::string& name, const TcnConfig& cfg, int dilation,
           std::mt19937_64& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Linear expand;
  PReLU act1;
  GlobalLayerNorm norm1;
  DepthwiseConv1d dconv;
  PReLU act2;
  GlobalLayerNorm norm2;
  Linear project;
};

/// Temporal convolutional mask estimator. The raw head output is
/// [num_bins x T] (non-negative, for magnitude masks) or [2*num_bins x T]
/// (real rows stacked over imaginary rows, for complex masks).
class TcnMaskNet {
 public:
  TcnMaskNet() = default;
  TcnMaskNet(const TcnConfig& cfg, uint64_t seed);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& features);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_raw);

  Eigen::MatrixXcd to_complex_mask(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd complex_grad_to_raw(const Eigen::MatrixXcd& grad_mask) const;

  std::vector<Param*> params();
  const TcnConfig& config() const { return cfg_; }

 private:
  TcnConfig cfg_;
  Linear input_;
  std::vector<TcnBlock> blocks_;
  Linear head_;
  ReLU head_relu_;
};

}  // namespace mcse
