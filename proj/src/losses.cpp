#include "mcse/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mcse/common.hpp"

namespace mcse {
namespace {

constexpr double kLog10Scale = 10.0 / 2.302585092994046;  // 10/ln(10)

struct SiSnrParts {
  Eigen::VectorXd s0;  // zero-meaned reference
  Eigen::VectorXd err;
  double dot = 0.0;    // <est, s0>
  double ref_pow = 0.0;
  double num = 0.0;
  double den_raw = 0.0;
};

SiSnrParts si_snr_parts(const Eigen::VectorXd& est, const Eigen::VectorXd& ref) {
  if (est.size() != ref.size()) throw DataError("si_snr: length mismatch");
  if (est.size() == 0) throw DataError("si_snr: empty input");
  SiSnrParts p;
  p.s0 = ref.array() - ref.mean();
  p.ref_pow = p.s0.squaredNorm();
  if (p.ref_pow <= 0.0) throw DataError("si_snr: reference is zero after mean removal");
  p.dot = est.dot(p.s0);
  p.err = est - (p.dot / p.ref_pow) * p.s0;
  p.num = p.dot * p.dot / p.ref_pow;  // ||s_target||^2
  p.den_raw = p.err.squaredNorm();
  return p;
}

}  // namespace

double si_snr_db(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                 double eps) {
  const SiSnrParts p = si_snr_parts(estimate, reference);
  const double num = std::max(p.num, 1e-30);
  return kLog10Scale * (std::log(num) - std::log(std::max(p.den_raw, eps)));
}

SiSnrGrad si_snr_with_grad(const Eigen::VectorXd& estimate,
                           const Eigen::VectorXd& reference, double eps) {
  const SiSnrParts p = si_snr_parts(estimate, reference);
  SiSnrGrad out;
  const double num = std::max(p.num, 1e-30);
  const double den = std::max(p.den_raw, eps);
  out.value_db = kLog10Scale * (std::log(num) - std::log(den));
  out.grad = Eigen::VectorXd::Zero(estimate.size());
  if (p.num > 1e-30 && p.dot != 0.0)
    out.grad += (2.0 * kLog10Scale / p.dot) * p.s0;
  if (p.den_raw > eps)
    out.grad -= (2.0 * kLog10Scale / p.den_raw) * p.err;
  return out;
}

MultiTaskResult multitask_loss(const Eigen::VectorXd& estimate,
                               const Eigen::VectorXd& reference, double alpha,
                               const LogFbank& fbank) {
  if (alpha < 0.0) throw DataError("multitask alpha must be >= 0");
  MultiTaskResult out;
  const SiSnrGrad snr = si_snr_with_grad(estimate, reference);
  out.si_snr_db = snr.value_db;
  out.total = -snr.value_db;
  out.grad = -snr.grad;
  if (alpha > 0.0) {
    const Eigen::MatrixXd fe = fbank.forward(estimate);
    const Eigen::MatrixXd fr = fbank.forward(reference);
    const Eigen::MatrixXd diff = fe - fr;
    const double count = static_cast<double>(diff.size());
    out.fbank_mse = diff.squaredNorm() / count;
    out.total += alpha * out.fbank_mse;
    out.grad += fbank.backward(estimate, (2.0 * alpha / count) * diff);
  }
  return out;
}

double sdr_db(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size()) throw DataError("sdr: length mismatch");
  const double sig = reference.squaredNorm();
  const double err = (estimate - reference).squaredNorm();
  if (err <= 0.0) return 100.0;
  if (sig <= 0.0) return -100.0;
  return std::clamp(10.0 * std::log10(sig / err), -100.0, 100.0);
}

long edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<long> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<long>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<long>(i);
    for (size_t j = 1; j <= m; ++j) {
      const long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double cer(const std::vector<int>& hypothesis, const std::vector<int>& reference) {
  if (reference.empty()) throw DataError("cer: empty reference");
  return static_cast<double>(edit_distance(hypothesis, reference)) /
         static_cast<double>(reference.size());
}

}  // namespace mcse
