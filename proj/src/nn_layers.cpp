#include "mcse/nn_layers.hpp"

#include <cmath>

#include "mcse/common.hpp"

namespace mcse {

void glorot_init(Eigen::MatrixXd& w, long fan_in, long fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (long j = 0; j < w.cols(); ++j)
    for (long i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
}

// ---------------------------------------------------------------- Linear

Linear::Linear(const std::string& name, int in_dim, int out_dim, std::mt19937_64& rng)
    : w(name + ".w", out_dim, in_dim), b(name + ".b", out_dim, 1) {
  glorot_init(w.value, in_dim, out_dim, rng);
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  return (w.value * x).colwise() + Eigen::VectorXd(b.value.col(0));
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& gy) {
  w.grad += gy * x_.transpose();
  b.grad.col(0) += gy.rowwise().sum();
  return w.value.transpose() * gy;
}

void Linear::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ------------------------------------------------------- DepthwiseConv1d

DepthwiseConv1d::DepthwiseConv1d(const std::string& name, int channels, int kernel,
                                 int dilation_, std::mt19937_64& rng)
    : w(name + ".w", channels, kernel), b(name + ".b", channels, 1),
      dilation(dilation_) {
  glorot_init(w.value, kernel, kernel, rng);
}

Eigen::MatrixXd DepthwiseConv1d::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  const long C = x.rows(), T = x.cols();
  const int K = static_cast<int>(w.value.cols());
  const int half = (K - 1) / 2;
  Eigen::MatrixXd y(C, T);
  for (long c = 0; c < C; ++c)
    for (long t = 0; t < T; ++t) {
      double acc = b.value(c, 0);
      for (int k = 0; k < K; ++k) {
        const long u = t + static_cast<long>(k - half) * dilation;
        if (u >= 0 && u < T) acc += w.value(c, k) * x(c, u);
      }
      y(c, t) = acc;
    }
  return y;
}

Eigen::MatrixXd DepthwiseConv1d::backward(const Eigen::MatrixXd& gy) {
  const long C = x_.rows(), T = x_.cols();
  const int K = static_cast<int>(w.value.cols());
  const int half = (K - 1) / 2;
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(C, T);
  for (long c = 0; c < C; ++c) {
    for (long t = 0; t < T; ++t) {
      const double g = gy(c, t);
      for (int k = 0; k < K; ++k) {
        const long u = t + static_cast<long>(k - half) * dilation;
        if (u >= 0 && u < T) {
          w.grad(c, k) += g * x_(c, u);
          gx(c, u) += g * w.value(c, k);
        }
      }
      b.grad(c, 0) += g;
    }
  }
  return gx;
}

void DepthwiseConv1d::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ----------------------------------------------------------------- PReLU

PReLU::PReLU(const std::string& name, int channels, double init_slope)
    : a(name + ".a", channels, 1) {
  a.value.setConstant(init_slope);
}

Eigen::MatrixXd PReLU::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  Eigen::MatrixXd y = x;
  for (long c = 0; c < x.rows(); ++c)
    for (long t = 0; t < x.cols(); ++t)
      if (x(c, t) < 0.0) y(c, t) = a.value(c, 0) * x(c, t);
  return y;
}

Eigen::MatrixXd PReLU::backward(const Eigen::MatrixXd& gy) {
  Eigen::MatrixXd gx = gy;
  for (long c = 0; c < x_.rows(); ++c)
    for (long t = 0; t < x_.cols(); ++t)
      if (x_(c, t) < 0.0) {
        a.grad(c, 0) += gy(c, t) * x_(c, t);
        gx(c, t) = gy(c, t) * a.value(c, 0);
      }
  return gx;
}

void PReLU::collect(std::vector<Param*>& out) { out.push_back(&a); }

// ------------------------------------------------------------------ ReLU

Eigen::MatrixXd ReLU::forward(const Eigen::MatrixXd& x) {
  x_ = x;
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd ReLU::backward(const Eigen::MatrixXd& gy) {
  return (x_.array() > 0.0).select(gy, Eigen::MatrixXd::Zero(gy.rows(), gy.cols()));
}

// ------------------------------------------------------- GlobalLayerNorm

GlobalLayerNorm::GlobalLayerNorm(const std::string& name, int channels, double eps_)
    : gamma(name + ".gamma", channels, 1), beta(name + ".beta", channels, 1),
      eps(eps_) {
  gamma.value.setOnes();
}

Eigen::MatrixXd GlobalLayerNorm::forward(const Eigen::MatrixXd& x) {
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  inv_std_ = 1.0 / std::sqrt(var + eps);
  xhat_ = (x.array() - mu).matrix() * inv_std_;
  Eigen::MatrixXd y = xhat_;
  for (long c = 0; c < x.rows(); ++c)
    y.row(c) = gamma.value(c, 0) * xhat_.row(c).array() + beta.value(c, 0);
  return y;
}

Eigen::MatrixXd GlobalLayerNorm::backward(const Eigen::MatrixXd& gy) {
  const long C = gy.rows(), T = gy.cols();
  const double n = static_cast<double>(C * T);
  Eigen::MatrixXd gxhat(C, T);
  for (long c = 0; c < C; ++c) {
    gamma.grad(c, 0) += gy.row(c).dot(xhat_.row(c));
    beta.grad(c, 0) += gy.row(c).sum();
    gxhat.row(c) = gamma.value(c, 0) * gy.row(c);
  }
  const double sum_g = gxhat.sum();
  const double sum_gx = (gxhat.array() * xhat_.array()).sum();
  // gx = inv_std * (gxhat - mean(gxhat) - xhat * mean(gxhat .* xhat))
  return inv_std_ *
         (gxhat.array() - sum_g / n - xhat_.array() * (sum_gx / n)).matrix();
}

void GlobalLayerNorm::collect(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// --------------------------------------------------------------- RowCmvn

Eigen::MatrixXd RowCmvn::forward(const Eigen::MatrixXd& x) {
  const long C = x.rows(), T = x.cols();
  xhat_.resize(C, T);
  inv_std_.resize(C);
  for (long c = 0; c < C; ++c) {
    const double mu = x.row(c).mean();
    const double var = (x.row(c).array() - mu).square().mean();
    inv_std_(c) = 1.0 / std::sqrt(var + eps_);
    xhat_.row(c) = (x.row(c).array() - mu) * inv_std_(c);
  }
  return xhat_;
}

Eigen::MatrixXd RowCmvn::backward(const Eigen::MatrixXd& gy) {
  const long C = gy.rows(), T = gy.cols();
  const double n = static_cast<double>(T);
  Eigen::MatrixXd gx(C, T);
  for (long c = 0; c < C; ++c) {
    const double sum_g = gy.row(c).sum();
    const double sum_gx = gy.row(c).dot(xhat_.row(c));
    gx.row(c) = inv_std_(c) *
                (gy.row(c).array() - sum_g / n - xhat_.row(c).array() * (sum_gx / n));
  }
  return gx;
}

// ------------------------------------------------------------------ LSTM

Lstm::Lstm(const std::string& name, int in_dim, int hidden_, std::mt19937_64& rng)
    : wx(name + ".wx", 4 * hidden_, in_dim), wh(name + ".wh", 4 * hidden_, hidden_),
      b(name + ".b", 4 * hidden_, 1), hidden(hidden_) {
  glorot_init(wx.value, in_dim, hidden_, rng);
  glorot_init(wh.value, hidden_, hidden_, rng);
  b.value.block(hidden, 0, hidden, 1).setOnes();  // forget-gate bias
}

namespace {
inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

Eigen::MatrixXd Lstm::forward(const Eigen::MatrixXd& x) {
  const long T = x.cols();
  const int U = hidden;
  x_ = x;
  gi_.resize(U, T); gf_.resize(U, T); gg_.resize(U, T); go_.resize(U, T);
  c_.resize(U, T); tc_.resize(U, T); h_.resize(U, T);
  const Eigen::MatrixXd zx = wx.value * x;
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(U);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(U);
  for (long t = 0; t < T; ++t) {
    const Eigen::VectorXd z = zx.col(t) + wh.value * h_prev + b.value.col(0);
    for (int u = 0; u < U; ++u) {
      const double i = sigmoid(z(u));
      const double f = sigmoid(z(U + u));
      const double g = std::tanh(z(2 * U + u));
      const double o = sigmoid(z(3 * U + u));
      const double c = f * c_prev(u) + i * g;
      const double tc = std::tanh(c);
      gi_(u, t) = i; gf_(u, t) = f; gg_(u, t) = g; go_(u, t) = o;
      c_(u, t) = c; tc_(u, t) = tc;
      h_(u, t) = o * tc;
    }
    h_prev = h_.col(t);
    c_prev = c_.col(t);
  }
  return h_;
}

Eigen::MatrixXd Lstm::backward(const Eigen::MatrixXd& gy) {
  const long T = x_.cols();
  const int U = hidden;
  Eigen::MatrixXd dz_all(4 * U, T);
  Eigen::VectorXd gh = Eigen::VectorXd::Zero(U);
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(U);
  for (long t = T - 1; t >= 0; --t) {
    Eigen::VectorXd dh = gy.col(t) + gh;
    Eigen::VectorXd dz(4 * U);
    for (int u = 0; u < U; ++u) {
      const double i = gi_(u, t), f = gf_(u, t), g = gg_(u, t), o = go_(u, t);
      const double tc = tc_(u, t);
      const double d_o = dh(u) * tc;
      double dc = gc(u) + dh(u) * o * (1.0 - tc * tc);
      const double di = dc * g;
      const double dg = dc * i;
      const double cp = (t > 0) ? c_(u, t - 1) : 0.0;
      const double df = dc * cp;
      gc(u) = dc * f;
      dz(u) = di * i * (1.0 - i);
      dz(U + u) = df * f * (1.0 - f);
      dz(2 * U + u) = dg * (1.0 - g * g);
      dz(3 * U + u) = d_o * o * (1.0 - o);
    }
    dz_all.col(t) = dz;
    gh = wh.value.transpose() * dz;
  }
  // Parameter gradients as single GEMMs; recurrent term uses shifted h.
  wx.grad += dz_all * x_.transpose();
  Eigen::MatrixXd h_shift = Eigen::MatrixXd::Zero(U, T);
  if (T > 1) h_shift.rightCols(T - 1) = h_.leftCols(T - 1);
  wh.grad += dz_all * h_shift.transpose();
  b.grad.col(0) += dz_all.rowwise().sum();
  return wx.value.transpose() * dz_all;
}

void Lstm::collect(std::vector<Param*>& out) {
  out.push_back(&wx);
  out.push_back(&wh);
  out.push_back(&b);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(const std::string& name, int in_c_, int out_c_, int kh_, int kw_,
               int sh_, int sw_, int ph_, int pw_, std::mt19937_64& rng)
    : w(name + ".w", out_c_, in_c_ * kh_ * kw_), b(name + ".b", out_c_, 1),
      in_c(in_c_), out_c(out_c_), kh(kh_), kw(kw_), sh(sh_), sw(sw_), ph(ph_),
      pw(pw_) {
  glorot_init(w.value, in_c_ * kh_ * kw_, out_c_, rng);
}

Image Conv2d::forward(const Image& x) {
  if (x.maps.rows() != in_c) throw DataError("conv2d: channel mismatch");
  in_h_ = x.height;
  in_w_ = x.width;
  const int oh = out_extent(x.height, kh, sh, ph);
  const int ow = out_extent(x.width, kw, sw, pw);
  if (oh <= 0 || ow <= 0) throw DataError("conv2d: input too small");
  cols_.resize(in_c * kh * kw, static_cast<long>(oh) * ow);
  cols_.setZero();
  for (int y = 0; y < oh; ++y)
    for (int xo = 0; xo < ow; ++xo) {
      const long col = static_cast<long>(y) * ow + xo;
      for (int c = 0; c < in_c; ++c)
        for (int dy = 0; dy < kh; ++dy) {
          const int sy = y * sh - ph + dy;
          if (sy < 0 || sy >= x.height) continue;
          for (int dx = 0; dx < kw; ++dx) {
            const int sx = xo * sw - pw + dx;
            if (sx < 0 || sx >= x.width) continue;
            cols_((static_cast<long>(c) * kh + dy) * kw + dx, col) =
                x.maps(c, static_cast<long>(sy) * x.width + sx);
          }
        }
    }
  Image y;
  y.height = oh;
  y.width = ow;
  y.maps = (w.value * cols_).colwise() + Eigen::VectorXd(b.value.col(0));
  return y;
}

Image Conv2d::backward(const Image& gy) {
  w.grad += gy.maps * cols_.transpose();
  b.grad.col(0) += gy.maps.rowwise().sum();
  const Eigen::MatrixXd gcols = w.value.transpose() * gy.maps;
  Image gx;
  gx.height = in_h_;
  gx.width = in_w_;
  gx.maps = Eigen::MatrixXd::Zero(in_c, static_cast<long>(in_h_) * in_w_);
  for (int y = 0; y < gy.height; ++y)
    for (int xo = 0; xo < gy.width; ++xo) {
      const long col = static_cast<long>(y) * gy.width + xo;
      for (int c = 0; c < in_c; ++c)
        for (int dy = 0; dy < kh; ++dy) {
          const int sy = y * sh - ph + dy;
          if (sy < 0 || sy >= in_h_) continue;
          for (int dx = 0; dx < kw; ++dx) {
            const int sx = xo * sw - pw + dx;
            if (sx < 0 || sx >= in_w_) continue;
            gx.maps(c, static_cast<long>(sy) * in_w_ + sx) +=
                gcols((static_cast<long>(c) * kh + dy) * kw + dx, col);
          }
        }
    }
  return gx;
}

void Conv2d::collect(std::vector<Param*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ------------------------------------------------------------ LogSoftmax

Eigen::MatrixXd LogSoftmax::forward(const Eigen::MatrixXd& x) {
  y_.resize(x.rows(), x.cols());
  for (long t = 0; t < x.cols(); ++t) {
    const double mx = x.col(t).maxCoeff();
    const double lse = mx + std::log((x.col(t).array() - mx).exp().sum());
    y_.col(t) = x.col(t).array() - lse;
  }
  return y_;
}

Eigen::MatrixXd LogSoftmax::backward(const Eigen::MatrixXd& gy) {
  Eigen::MatrixXd gx(gy.rows(), gy.cols());
  for (long t = 0; t < gy.cols(); ++t) {
    const double s = gy.col(t).sum();
    gx.col(t) = gy.col(t).array() - y_.col(t).array().exp() * s;
  }
  return gx;
}

}  // namespace mcse
