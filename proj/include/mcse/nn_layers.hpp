#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace mcse {

/// Learnable tensor with accumulated gradient. Layers register their params
/// so optimizers and checkpoints can walk a network generically.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Param() = default;
  Param(std::string n, long rows, long cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}
  void zero_grad() { grad.setZero(); }
};

void glorot_init(Eigen::MatrixXd& w, long fan_in, long fan_out, std::mt19937_64& rng);

/// All 1-D layers operate on [channels x time] matrices. forward() caches
/// whatever backward() needs; backward() accumulates parameter gradients and
/// returns the gradient w.r.t. the input.

class Linear {  // pointwise (1x1) transform, also used as a dense layer
 public:
  Linear() = default;
  Linear(const std::string& name, int in_dim, int out_dim, std::mt19937_64& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Param w, b;

 private:
  Eigen::MatrixXd x_;
};

class DepthwiseConv1d {  // kernel 3, symmetric zero padding, per-channel
 public:
  DepthwiseConv1d() = default;
  DepthwiseConv1d(const std::string& name, int channels, int kernel, int dilation,
                  std::mt19937_64& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Param w, b;  // w: [channels x kernel]
  int dilation = 1;

 private:
  Eigen::MatrixXd x_;
};

class PReLU {
 public:
  PReLU() = default;
  PReLU(const std::string& name, int channels, double init_slope = 0.25);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Param a;  // [channels x 1]

 private:
  Eigen::MatrixXd x_;
};

class ReLU {
 public:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);

 private:
  Eigen::MatrixXd x_;
};

class GlobalLayerNorm {  // normalizes over channels and time jointly
 public:
  GlobalLayerNorm() = default;
  GlobalLayerNorm(const std::string& name, int channels, double eps = 1e-8);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Param gamma, beta;  // [channels x 1]
  double eps = 1e-8;

 private:
  Eigen::MatrixXd xhat_;
  double inv_std_ = 0.0;
};

/// Per-row (per-feature) mean/variance normalization over time. Makes the
/// acoustic model invariant to utterance-level gain, which for log features
/// is an additive offset.
class RowCmvn {
 public:
  explicit RowCmvn(double eps = 1e-8) : eps_(eps) {}
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);

 private:
  double eps_;
  Eigen::MatrixXd xhat_;
  Eigen::VectorXd inv_std_;
};

class Lstm {  // unidirectional, gate order (input, forget, cell, output)
 public:
  Lstm() = default;
  Lstm(const std::string& name, int in_dim, int hidden, std::mt19937_64& rng);
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
  void collect(std::vector<Param*>& out);

  Param wx, wh, b;  // [4U x I], [4U x U], [4U x 1]
  int hidden = 0;

 private:
  Eigen::MatrixXd x_, gi_, gf_, gg_, go_, c_, tc_, h_;
};

/// Feature maps stored as [channels x (height*width)], row-major spatial
/// flattening (index = h*width + w).
struct Image {
  Eigen::MatrixXd maps;
  int height = 0;
  int width = 0;
};

class Conv2d {  // stride/pad configurable, im2col implementation
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_c, int out_c, int kh, int kw, int sh,
         int sw, int ph, int pw, std::mt19937_64& rng);
  Image forward(const Image& x);
  Image backward(const Image& gy);
  void collect(std::vector<Param*>& out);
  static int out_extent(int in, int k, int s, int p) {
    return (in + 2 * p - k) / s + 1;
  }

  Param w, b;  // w: [out_c x in_c*kh*kw]
  int in_c = 0, out_c = 0, kh = 0, kw = 0, sh = 1, sw = 1, ph = 0, pw = 0;

 private:
  Eigen::MatrixXd cols_;
  int in_h_ = 0, in_w_ = 0;
};

class LogSoftmax {  // over rows (classes), independently per column (frame)
 public:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);

 private:
  Eigen::MatrixXd y_;
};

}  // namespace mcse
