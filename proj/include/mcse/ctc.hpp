#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mcse {

struct CtcResult {
  double loss = 0.0;              // negative log likelihood
  Eigen::MatrixXd grad_logp;      // dL/d(log_probs), [classes x frames]
};

/// Forward-backward CTC over per-frame log posteriors [classes x frames].
/// Labels must exclude the blank id. Throws when the label sequence cannot
/// fit in the given number of frames.
CtcResult ctc_loss(const Eigen::MatrixXd& log_probs, const std::vector<int>& labels,
                   int blank);

/// Minimum frames needed: |labels| plus one per adjacent repeat.
long ctc_min_frames(const std::vector<int>& labels);

/// Best-path decode: framewise argmax, collapse repeats, drop blanks.
std::vector<int> ctc_greedy_decode(const Eigen::MatrixXd& log_probs, int blank);

}  // namespace mcse
