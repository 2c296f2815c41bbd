#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mcse/adam.hpp"
#include "mcse/cldnn.hpp"
#include "mcse/nn_layers.hpp"
#include "mcse/tcn.hpp"
#include "support.hpp"

using namespace mcse;

namespace {

// Finite-difference check of one layer: perturbs params and input, compares
// against the grads produced by backward(). Loss is sum(G .* forward(x)).
template <class Layer>
void check_layer(Layer& layer, Eigen::MatrixXd x, std::mt19937_64& rng,
                 double tol = 1e-6, long coords = 25) {
  const Eigen::MatrixXd g0 = layer.forward(x);
  const Eigen::MatrixXd G = testsup::random_matrix(g0.rows(), g0.cols(), rng);

  std::vector<Param*> params;
  layer.collect(params);
  for (Param* p : params) p->zero_grad();
  layer.forward(x);
  const Eigen::MatrixXd gx = layer.backward(G);

  auto eval = [&]() { return (layer.forward(x).array() * G.array()).sum(); };

  for (Param* p : params) {
    const auto res = testsup::check_gradient(
        p->value.size(), [&](long i) -> double& { return p->value.data()[i]; },
        eval, [&](long i) { return p->grad.data()[i]; }, 1e-6, coords, &rng);
    INFO(p->name);
    CHECK(res.max_rel < tol);
  }
  const auto res = testsup::check_gradient(
      x.size(), [&](long i) -> double& { return x.data()[i]; }, eval,
      [&](long i) { return gx.data()[i]; }, 1e-6, coords, &rng);
  CHECK(res.max_rel < tol);
}

}  // namespace

TEST_CASE("linear layer forward and gradients") {
  std::mt19937_64 rng(1);
  Linear lin("lin", 4, 3, rng);
  const Eigen::MatrixXd x = testsup::random_matrix(4, 7, rng);
  const Eigen::MatrixXd y = lin.forward(x);
  REQUIRE(y.rows() == 3);
  REQUIRE(y.cols() == 7);
  const Eigen::MatrixXd want =
      lin.w.value * x + lin.b.value * Eigen::RowVectorXd::Ones(7);
  CHECK((y - want).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXd x2 = testsup::random_matrix(4, 7, rng);
  check_layer(lin, x2, rng);
}

TEST_CASE("depthwise conv pads symmetrically and respects dilation") {
  std::mt19937_64 rng(2);
  DepthwiseConv1d conv("dc", 3, 3, 2, rng);
  const Eigen::MatrixXd x = testsup::random_matrix(3, 9, rng);
  const Eigen::MatrixXd y = conv.forward(x);
  REQUIRE(y.rows() == 3);
  REQUIRE(y.cols() == 9);
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 9; ++t) {
      double acc = conv.b.value(c, 0);
      for (int k = 0; k < 3; ++k) {
        const int src = t + (k - 1) * 2;  // dilation 2, centered kernel
        if (src >= 0 && src < 9) acc += conv.w.value(c, k) * x(c, src);
      }
      CHECK(y(c, t) == doctest::Approx(acc).epsilon(1e-10));
    }
  Eigen::MatrixXd x2 = testsup::random_matrix(3, 9, rng);
  check_layer(conv, x2, rng);
}

TEST_CASE("prelu applies per-channel slopes below zero") {
  std::mt19937_64 rng(3);
  PReLU act("pr", 2);
  CHECK(act.a.value(0, 0) == 0.25);
  Eigen::MatrixXd x(2, 3);
  x << 1.0, -2.0, 0.5, -1.0, 4.0, -0.5;
  const Eigen::MatrixXd y = act.forward(x);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == -0.5);
  CHECK(y(1, 0) == -0.25);
  CHECK(y(1, 1) == 4.0);
  // keep all inputs away from the kink for finite differences
  Eigen::MatrixXd x2 = testsup::random_matrix(2, 6, rng);
  x2 = x2.unaryExpr([](double v) { return std::abs(v) < 0.2 ? v + 0.5 : v; });
  check_layer(act, x2, rng);
}

TEST_CASE("relu zeroes negatives and back-propagates the mask") {
  ReLU act;
  Eigen::MatrixXd x(1, 4);
  x << -1.0, 2.0, -3.0, 4.0;
  const Eigen::MatrixXd y = act.forward(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 2.0);
  Eigen::MatrixXd g(1, 4);
  g << 10.0, 20.0, 30.0, 40.0;
  const Eigen::MatrixXd gx = act.backward(g);
  CHECK(gx(0, 0) == 0.0);
  CHECK(gx(0, 1) == 20.0);
  CHECK(gx(0, 2) == 0.0);
  CHECK(gx(0, 3) == 40.0);
}

TEST_CASE("global layer norm normalizes over the whole plane") {
  std::mt19937_64 rng(4);
  GlobalLayerNorm norm("gln", 3);
  Eigen::MatrixXd x = testsup::random_matrix(3, 8, rng, 2.0);
  const Eigen::MatrixXd y = norm.forward(x);
  // with unit gamma and zero beta, output has zero mean and unit variance
  CHECK(std::abs(y.mean()) < 1e-10);
  CHECK(y.array().square().mean() == doctest::Approx(1.0).epsilon(1e-6));
  Eigen::MatrixXd x2 = testsup::random_matrix(3, 8, rng);
  check_layer(norm, x2, rng, 1e-5);
}

TEST_CASE("row cmvn normalizes each feature row") {
  std::mt19937_64 rng(5);
  RowCmvn cmvn;
  Eigen::MatrixXd x = testsup::random_matrix(4, 50, rng, 3.0);
  x.row(2).array() += 100.0;  // large offset must vanish
  const Eigen::MatrixXd y = cmvn.forward(x);
  for (int r = 0; r < 4; ++r) {
    CHECK(std::abs(y.row(r).mean()) < 1e-9);
    CHECK(y.row(r).array().square().mean() == doctest::Approx(1.0).epsilon(1e-6));
  }
  // gradient w.r.t. input via finite differences
  Eigen::MatrixXd x2 = testsup::random_matrix(2, 12, rng);
  const Eigen::MatrixXd y0 = cmvn.forward(x2);
  const Eigen::MatrixXd G = testsup::random_matrix(2, 12, rng);
  const Eigen::MatrixXd gx = cmvn.backward(G);
  auto eval = [&]() { return (cmvn.forward(x2).array() * G.array()).sum(); };
  const auto res = testsup::check_gradient(
      x2.size(), [&](long i) -> double& { return x2.data()[i]; }, eval,
      [&](long i) { return gx.data()[i]; }, 1e-6, 24, &rng);
  CHECK(res.max_rel < 1e-5);
}

TEST_CASE("lstm starts with a unit forget bias and passes gradient checks") {
  std::mt19937_64 rng(6);
  Lstm lstm("l", 3, 4, rng);
  CHECK(lstm.b.value.block(4, 0, 4, 1) == Eigen::MatrixXd::Ones(4, 1));
  CHECK(lstm.b.value.block(0, 0, 4, 1) == Eigen::MatrixXd::Zero(4, 1));
  const Eigen::MatrixXd x = testsup::random_matrix(3, 6, rng);
  const Eigen::MatrixXd y = lstm.forward(x);
  REQUIRE(y.rows() == 4);
  REQUIRE(y.cols() == 6);
  CHECK(y.cwiseAbs().maxCoeff() < 1.0);  // tanh-bounded output
  Eigen::MatrixXd x2 = testsup::random_matrix(3, 6, rng);
  check_layer(lstm, x2, rng, 1e-5, 40);
}

TEST_CASE("conv2d matches a naive convolution and its gradients check out") {
  std::mt19937_64 rng(7);
  Conv2d conv("c", 2, 3, 3, 3, 2, 2, 1, 1, rng);
  Image x;
  x.height = 5;
  x.width = 6;
  x.maps = testsup::random_matrix(2, 30, rng);
  Image y = conv.forward(x);
  const int oh = Conv2d::out_extent(5, 3, 2, 1);
  const int ow = Conv2d::out_extent(6, 3, 2, 1);
  REQUIRE(y.height == oh);
  REQUIRE(y.width == ow);
  REQUIRE(y.maps.rows() == 3);
  REQUIRE(y.maps.cols() == oh * ow);
  for (int oc = 0; oc < 3; ++oc)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double acc = conv.b.value(oc, 0);
        for (int ic = 0; ic < 2; ++ic)
          for (int ki = 0; ki < 3; ++ki)
            for (int kj = 0; kj < 3; ++kj) {
              const int si = i * 2 + ki - 1, sj = j * 2 + kj - 1;
              if (si < 0 || si >= 5 || sj < 0 || sj >= 6) continue;
              acc += conv.w.value(oc, (ic * 3 + ki) * 3 + kj) * x.maps(ic, si * 6 + sj);
            }
        CHECK(y.maps(oc, i * ow + j) == doctest::Approx(acc).epsilon(1e-10));
      }

  // finite differences through the Image wrapper
  std::vector<Param*> params;
  conv.collect(params);
  for (Param* p : params) p->zero_grad();
  const Eigen::MatrixXd G = testsup::random_matrix(3, oh * ow, rng);
  conv.forward(x);
  Image gimg;
  gimg.maps = G;
  gimg.height = oh;
  gimg.width = ow;
  const Image gx = conv.backward(gimg);
  auto eval = [&]() { return (conv.forward(x).maps.array() * G.array()).sum(); };
  for (Param* p : params) {
    const auto res = testsup::check_gradient(
        p->value.size(), [&](long i) -> double& { return p->value.data()[i]; },
        eval, [&](long i) { return p->grad.data()[i]; }, 1e-6, 25, &rng);
    CHECK(res.max_rel < 1e-6);
  }
  const auto res = testsup::check_gradient(
      x.maps.size(), [&](long i) -> double& { return x.maps.data()[i]; }, eval,
      [&](long i) { return gx.maps.data()[i]; }, 1e-6, 25, &rng);
  CHECK(res.max_rel < 1e-6);
}

TEST_CASE("log softmax normalizes columns and its backward is exact") {
  std::mt19937_64 rng(8);
  LogSoftmax ls;
  Eigen::MatrixXd x = testsup::random_matrix(5, 4, rng, 3.0);
  const Eigen::MatrixXd y = ls.forward(x);
  for (int t = 0; t < 4; ++t)
    CHECK(y.col(t).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXd G = testsup::random_matrix(5, 4, rng);
  ls.forward(x);
  const Eigen::MatrixXd gx = ls.backward(G);
  auto eval = [&]() { return (ls.forward(x).array() * G.array()).sum(); };
  const auto res = testsup::check_gradient(
      x.size(), [&](long i) -> double& { return x.data()[i]; }, eval,
      [&](long i) { return gx.data()[i]; }, 1e-6, 20, &rng);
  CHECK(res.max_rel < 1e-6);
}

TEST_CASE("tcn at init is the identity mask") {
  TcnConfig cfg;
  cfg.input_dim = 20;
  cfg.num_bins = 5;
  cfg.bottleneck = 6;
  cfg.hidden = 8;
  cfg.blocks_per_repeat = 2;
  cfg.repeats = 1;

  SUBCASE("complex head") {
    cfg.mask_kind = MaskKind::Cirm;
    TcnMaskNet net(cfg, 42);
    const Eigen::MatrixXd raw = net.forward(Eigen::MatrixXd::Zero(20, 3));
    REQUIRE(raw.rows() == 10);
    const Eigen::MatrixXcd mask = net.to_complex_mask(raw);
    for (long t = 0; t < 3; ++t)
      for (long k = 0; k < 5; ++k)
        CHECK(std::abs(mask(k, t) - std::complex<double>(1.0, 0.0)) < 1e-12);
  }
  SUBCASE("magnitude head") {
    cfg.mask_kind = MaskKind::Irm;
    TcnMaskNet net(cfg, 42);
    const Eigen::MatrixXd raw = net.forward(Eigen::MatrixXd::Zero(20, 3));
    REQUIRE(raw.rows() == 5);
    CHECK((raw - Eigen::MatrixXd::Ones(5, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tcn construction is deterministic in the seed") {
  TcnConfig cfg;
  cfg.input_dim = 20;
  cfg.num_bins = 5;
  cfg.bottleneck = 6;
  cfg.hidden = 8;
  cfg.blocks_per_repeat = 2;
  cfg.repeats = 1;
  TcnMaskNet a(cfg, 9), b(cfg, 9), c(cfg, 10);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  REQUIRE(pa.size() == pb.size());
  bool all_eq = true, any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->value != pb[i]->value) all_eq = false;
    if (pa[i]->value != pc[i]->value) any_diff = true;
  }
  CHECK(all_eq);
  CHECK(any_diff);
}

TEST_CASE("tcn end-to-end gradients agree with finite differences") {
  TcnConfig cfg;
  cfg.input_dim = 14;
  cfg.num_bins = 4;
  cfg.bottleneck = 5;
  cfg.hidden = 6;
  cfg.blocks_per_repeat = 2;
  cfg.repeats = 1;
  cfg.mask_kind = MaskKind::Cirm;
  std::mt19937_64 rng(11);
  TcnMaskNet net(cfg, 3);
  const Eigen::MatrixXd feat = testsup::random_matrix(14, 5, rng);
  const Eigen::MatrixXd raw0 = net.forward(feat);
  const Eigen::MatrixXd G = testsup::random_matrix(raw0.rows(), raw0.cols(), rng);

  auto params = net.params();
  for (Param* p : params) p->zero_grad();
  net.forward(feat);
  net.backward(G);
  auto eval = [&]() { return (net.forward(feat).array() * G.array()).sum(); };
  for (Param* p : params) {
    const auto res = testsup::check_gradient(
        p->value.size(), [&](long i) -> double& { return p->value.data()[i]; },
        eval, [&](long i) { return p->grad.data()[i]; }, 1e-6, 6, &rng);
    INFO(p->name);
    CHECK(res.max_rel < 1e-4);
  }
}

TEST_CASE("cldnn shapes, output rate and input gradient") {
  CldnnConfig cfg;
  cfg.num_mels = 8;
  cfg.num_phones = 4;
  cfg.conv1_maps = 2;
  cfg.conv2_maps = 3;
  cfg.lstm_layers = 2;
  cfg.lstm_hidden = 5;
  std::mt19937_64 rng(12);
  CldnnAm am(cfg, 5);
  const long T = 17;
  Eigen::MatrixXd lfb = testsup::random_matrix(8, T, rng);
  const Eigen::MatrixXd logp = am.forward(lfb);
  REQUIRE(logp.rows() == 5);
  REQUIRE(logp.cols() == am.out_frames(T));
  CHECK(am.out_frames(T) ==
        Conv2d::out_extent(Conv2d::out_extent(17, 3, 2, 1), 3, 2, 1));
  for (long t = 0; t < logp.cols(); ++t)
    CHECK(logp.col(t).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-10));

  const Eigen::MatrixXd G = testsup::random_matrix(logp.rows(), logp.cols(), rng);
  am.forward(lfb);
  const Eigen::MatrixXd gx = am.backward(G);
  REQUIRE(gx.rows() == 8);
  REQUIRE(gx.cols() == T);
  auto eval = [&]() { return (am.forward(lfb).array() * G.array()).sum(); };
  const auto res = testsup::check_gradient(
      lfb.size(), [&](long i) -> double& { return lfb.data()[i]; }, eval,
      [&](long i) { return gx.data()[i]; }, 1e-6, 25, &rng);
  CHECK(res.max_rel < 1e-4);
}

TEST_CASE("adam descends a quadratic and reports the pre-clip norm") {
  std::mt19937_64 rng(13);
  Param w("w", 4, 1);
  w.value = testsup::random_matrix(4, 1, rng);
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam opt({&w}, cfg);
  double prev = w.value.squaredNorm();
  for (int it = 0; it < 200; ++it) {
    w.grad = w.value;  // gradient of 0.5*||w||^2
    const double norm = opt.step();
    if (it == 0) CHECK(norm == doctest::Approx(std::sqrt(prev)).epsilon(1e-12));
    opt.zero_grad();
  }
  CHECK(w.value.squaredNorm() < 1e-3 * prev);
}

TEST_CASE("adam refuses non-finite gradients") {
  Param w("w", 2, 1);
  w.value.setOnes();
  Adam opt({&w}, AdamConfig{});
  w.grad.setConstant(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(opt.step(), NumericError);
}
