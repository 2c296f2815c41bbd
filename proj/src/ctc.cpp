#include "mcse/ctc.hpp"

#include <cmath>
#include <limits>

#include "mcse/common.hpp"

namespace mcse {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-(std::abs(a - b))));
}

}  // namespace

long ctc_min_frames(const std::vector<int>& labels) {
  long need = static_cast<long>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++need;
  return need;
}

CtcResult ctc_loss(const Eigen::MatrixXd& log_probs, const std::vector<int>& labels,
                   int blank) {
  const long C = log_probs.rows();
  const long T = log_probs.cols();
  if (blank < 0 || blank >= C) throw DataError("ctc: blank id out of range");
  for (int l : labels)
    if (l < 0 || l >= C || l == blank)
      throw DataError("ctc: label out of range or equal to blank");
  if (T < ctc_min_frames(labels))
    throw DataError("ctc: label sequence too long for input frames");
  if (T == 0) throw DataError("ctc: no frames");

  const long L = static_cast<long>(labels.size());
  const long S = 2 * L + 1;
  auto sym = [&](long s) -> int {
    return (s % 2 == 0) ? blank : labels[static_cast<size_t>(s / 2)];
  };
  auto can_skip = [&](long s) -> bool {
    // Transition s-2 -> s allowed when s is a non-blank different from s-2.
    return s % 2 == 1 && s >= 2 && sym(s) != sym(s - 2);
  };

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(S, T, kNegInf);
  alpha(0, 0) = log_probs(sym(0), 0);
  if (S > 1) alpha(1, 0) = log_probs(sym(1), 0);
  for (long t = 1; t < T; ++t)
    for (long s = 0; s < S; ++s) {
      double a = alpha(s, t - 1);
      if (s >= 1) a = log_add(a, alpha(s - 1, t - 1));
      if (can_skip(s)) a = log_add(a, alpha(s - 2, t - 1));
      if (a != kNegInf) alpha(s, t) = a + log_probs(sym(s), t);
    }

  double log_p = alpha(S - 1, T - 1);
  if (S > 1) log_p = log_add(log_p, alpha(S - 2, T - 1));
  if (log_p == kNegInf) throw NumericError("ctc: zero path probability");

  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(S, T, kNegInf);
  beta(S - 1, T - 1) = log_probs(sym(S - 1), T - 1);
  if (S > 1) beta(S - 2, T - 1) = log_probs(sym(S - 2), T - 1);
  for (long t = T - 2; t >= 0; --t)
    for (long s = S - 1; s >= 0; --s) {
      double b = beta(s, t + 1);
      if (s + 1 < S) b = log_add(b, beta(s + 1, t + 1));
      if (s + 2 < S && can_skip(s + 2)) b = log_add(b, beta(s + 2, t + 1));
      if (b != kNegInf) beta(s, t) = b + log_probs(sym(s), t);
    }

  CtcResult out;
  out.loss = -log_p;
  out.grad_logp = Eigen::MatrixXd::Zero(C, T);
  for (long t = 0; t < T; ++t) {
    Eigen::VectorXd acc = Eigen::VectorXd::Constant(C, kNegInf);
    for (long s = 0; s < S; ++s) {
      if (alpha(s, t) == kNegInf || beta(s, t) == kNegInf) continue;
      const int k = sym(s);
      // alpha and beta both include the emission at t; divide one out.
      acc(k) = log_add(acc(k), alpha(s, t) + beta(s, t) - log_probs(k, t));
    }
    for (long k = 0; k < C; ++k)
      if (acc(k) != kNegInf) out.grad_logp(k, t) = -std::exp(acc(k) - log_p);
  }
  return out;
}

std::vector<int> ctc_greedy_decode(const Eigen::MatrixXd& log_probs, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (long t = 0; t < log_probs.cols(); ++t) {
    long best = 0;
    log_probs.col(t).maxCoeff(&best);
    const int k = static_cast<int>(best);
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

}  // namespace mcse
