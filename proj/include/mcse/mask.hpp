#pragma once

#include <Eigen/Dense>

#include "mcse/dsp.hpp"

namespace mcse {

/// Real magnitude mask applied to the mixture spectrogram, then resynthesized.
/// Mask entries must be >= 0.
Eigen::VectorXd apply_irm(const Eigen::MatrixXd& mask, const Spectrogram& mix,
                          long num_samples);

/// Complex ratio mask: full complex multiply, then resynthesis.
Eigen::VectorXd apply_cirm(const Eigen::MatrixXcd& mask, const Spectrogram& mix,
                           long num_samples);

/// dL/dmask given dL/dwave, chaining through the synthesis stage.
Eigen::MatrixXd irm_mask_grad(const Eigen::VectorXd& grad_wave,
                              const Spectrogram& mix);
Eigen::MatrixXcd cirm_mask_grad(const Eigen::VectorXd& grad_wave,
                                const Spectrogram& mix);

/// |S|/|Y| capped to [0, mag_clip].
Eigen::MatrixXd oracle_irm(const Spectrogram& target, const Spectrogram& mix,
                           double mag_clip = 10.0);

/// S/Y with magnitude capped at mag_clip.
Eigen::MatrixXcd oracle_cirm(const Spectrogram& target, const Spectrogram& mix,
                             double mag_clip = 10.0);

/// Fraction of active reference TF bins (within active_db of the reference
/// peak) whose enhanced magnitude fell below floor_ratio times the reference
/// magnitude — a proxy for audible spectral holes.
double hole_fraction(const Eigen::VectorXd& enhanced,
                     const Eigen::VectorXd& reference, const FrameSpec& spec,
                     double floor_ratio = 0.1, double active_db = -40.0);

}  // namespace mcse
