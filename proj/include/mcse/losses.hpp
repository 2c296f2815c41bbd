#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mcse/features.hpp"

namespace mcse {

/// Scale-invariant SNR in dB. The reference is zero-meaned; the estimate is
/// projected onto it (s_target) and the residual forms the error term. The
/// denominator is floored at eps to keep perfect reconstruction finite.
double si_snr_db(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                 double eps = 1e-8);

struct SiSnrGrad {
  double value_db = 0.0;
  Eigen::VectorXd grad;  // d(value_db)/d(estimate)
};
SiSnrGrad si_snr_with_grad(const Eigen::VectorXd& estimate,
                           const Eigen::VectorXd& reference, double eps = 1e-8);

/// Multitask enhancement loss: -SI-SNR + alpha * mean((LFB(est)-LFB(ref))^2),
/// the mean taken over all mel x frame entries.
struct MultiTaskResult {
  double total = 0.0;
  double si_snr_db = 0.0;
  double fbank_mse = 0.0;
  Eigen::VectorXd grad;  // d(total)/d(estimate)
};
MultiTaskResult multitask_loss(const Eigen::VectorXd& estimate,
                               const Eigen::VectorXd& reference, double alpha,
                               const LogFbank& fbank);

/// Plain (scale-variant) signal-to-distortion ratio, capped to [-100, 100] dB.
double sdr_db(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

/// Levenshtein distance / reference length.
double cer(const std::vector<int>& hypothesis, const std::vector<int>& reference);

long edit_distance(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace mcse
