#pragma once

// Shared oracles and helpers for the test suite.  Everything here is an
// independent re-derivation (direct DFT, brute-force path enumeration,
// Schroeder integration, central differences) so library results can be
// checked against slow-but-obvious math.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "mcse/common.hpp"

namespace testsup {

inline constexpr double kPi = 3.14159265358979323846;

// O(n^2) discrete Fourier transform, the oracle for any FFT-based path.
inline Eigen::VectorXcd direct_dft(const Eigen::VectorXd& x) {
  const long n = x.size();
  Eigen::VectorXcd out(n);
  for (long k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (long t = 0; t < n; ++t) {
      const double ph = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) / n;
      acc += x[t] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    out[k] = acc;
  }
  return out;
}

// Direct inverse DFT of a half spectrum assuming Hermitian symmetry.
inline Eigen::VectorXd direct_idft_half(const Eigen::VectorXcd& half, long n) {
  Eigen::VectorXd out(n);
  for (long t = 0; t < n; ++t) {
    double acc = 0.0;
    for (long k = 0; k < half.size(); ++k) {
      const double ph = 2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) / n;
      const std::complex<double> w(std::cos(ph), std::sin(ph));
      const double term = (half[k] * w).real();
      const bool interior = k != 0 && k != n / 2;
      acc += interior ? 2.0 * term : term;
    }
    out[t] = acc / n;
  }
  return out;
}

// Energy-decay-curve T60 estimate: Schroeder backward integration followed by
// a least-squares line fit on the [-5, -25] dB stretch of the decay.
inline double schroeder_t60(const Eigen::VectorXd& h, double fs) {
  const long n = h.size();
  Eigen::VectorXd edc(n);
  double acc = 0.0;
  for (long i = n - 1; i >= 0; --i) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  if (edc[0] <= 0.0) return 0.0;
  std::vector<double> ts, ls;
  for (long i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(edc[i] / edc[0] + 1e-300);
    if (db <= -5.0 && db >= -25.0) {
      ts.push_back(static_cast<double>(i) / fs);
      ls.push_back(db);
    }
  }
  if (ts.size() < 8) return 0.0;
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double m = static_cast<double>(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * ls[i];
  }
  const double slope = (m * stl - st * sl) / (m * stt - st * st);
  if (slope >= 0.0) return 0.0;
  return -60.0 / slope;
}

// Brute-force CTC: enumerate every alignment path, keep those whose collapse
// (merge repeats, drop blanks) equals the label sequence, sum their
// probabilities.  Only usable for tiny frames/alphabets.
inline double ctc_brute_force(const Eigen::MatrixXd& logp, const std::vector<int>& labels,
                              int blank) {
  const int K = static_cast<int>(logp.rows());
  const int T = static_cast<int>(logp.cols());
  double total = -std::numeric_limits<double>::infinity();
  std::vector<int> path(T, 0);
  const long npaths = static_cast<long>(std::pow(static_cast<double>(K), T));
  for (long idx = 0; idx < npaths; ++idx) {
    long v = idx;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(v % K);
      v /= K;
    }
    std::vector<int> collapsed;
    int prev = -1;
    for (int t = 0; t < T; ++t) {
      if (path[t] != prev) collapsed.push_back(path[t]);
      prev = path[t];
    }
    std::vector<int> stripped;
    for (int s : collapsed)
      if (s != blank) stripped.push_back(s);
    if (stripped != labels) continue;
    double lp = 0.0;
    for (int t = 0; t < T; ++t) lp += logp(path[t], t);
    if (total == -std::numeric_limits<double>::infinity())
      total = lp;
    else {
      const double hi = std::max(total, lp), lo = std::min(total, lp);
      total = hi + std::log1p(std::exp(lo - hi));
    }
  }
  return -total;
}

// Central finite difference of a scalar function at x.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative error suited to gradient checking: absolute near zero, relative
// otherwise.
inline double rel_err(double got, double want) {
  const double denom = std::max({1.0, std::abs(got), std::abs(want)});
  return std::abs(got - want) / denom;
}

// Checks an analytic gradient against central differences entry by entry.
// `eval` recomputes the scalar loss from scratch; `slot` exposes a writable
// reference to coordinate i; grad[i] is the analytic derivative.
struct GradCheck {
  double max_rel = 0.0;
  long worst_index = -1;
  bool ok(double tol) const { return max_rel < tol; }
};

inline GradCheck check_gradient(long count, const std::function<double&(long)>& slot,
                                const std::function<double()>& eval,
                                const std::function<double(long)>& analytic,
                                double h = 1e-6, long max_coords = -1,
                                std::mt19937_64* rng = nullptr) {
  GradCheck res;
  std::vector<long> idx(count);
  for (long i = 0; i < count; ++i) idx[i] = i;
  if (max_coords > 0 && max_coords < count && rng) {
    std::shuffle(idx.begin(), idx.end(), *rng);
    idx.resize(max_coords);
  }
  for (long i : idx) {
    double& x = slot(i);
    const double x0 = x;
    const double an = analytic(i);
    // Shrinking the step on a poor match separates genuine gradient bugs
    // (which fail at every step size) from the rare coordinate whose
    // difference interval straddles an activation kink.
    double e = std::numeric_limits<double>::infinity();
    for (const double h0 : {h, h / 8.0, h / 64.0}) {
      const double step = h0 * std::max(1.0, std::abs(x0));
      x = x0 + step;
      const double fp = eval();
      x = x0 - step;
      const double fm = eval();
      x = x0;
      const double fd = (fp - fm) / (2.0 * step);
      e = std::min(e, rel_err(an, fd));
      if (e < 1e-7) break;
    }
    if (e > res.max_rel) {
      res.max_rel = e;
      res.worst_index = i;
    }
  }
  return res;
}

inline Eigen::MatrixXd random_matrix(long r, long c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (long j = 0; j < c; ++j)
    for (long i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

inline Eigen::VectorXd random_vector(long n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace testsup
