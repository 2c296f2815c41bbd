#include "mcse/mask.hpp"

#include <cmath>
#include <complex>

#include "mcse/common.hpp"

namespace mcse {

Eigen::VectorXd apply_irm(const Eigen::MatrixXd& mask, const Spectrogram& mix,
                          long num_samples) {
  if (mask.rows() != mix.bins.rows() || mask.cols() != mix.bins.cols())
    throw DataError("mask/spectrogram shape mismatch");
  if ((mask.array() < 0.0).any())
    throw DataError("magnitude mask has negative entries");
  Spectrogram masked;
  masked.frame_spec = mix.frame_spec;
  masked.bins = mask.cast<std::complex<double>>().cwiseProduct(mix.bins);
  return istft(masked, num_samples);
}

Eigen::VectorXd apply_cirm(const Eigen::MatrixXcd& mask, const Spectrogram& mix,
                           long num_samples) {
  if (mask.rows() != mix.bins.rows() || mask.cols() != mix.bins.cols())
    throw DataError("mask/spectrogram shape mismatch");
  Spectrogram masked;
  masked.frame_spec = mix.frame_spec;
  masked.bins = mask.cwiseProduct(mix.bins);
  return istft(masked, num_samples);
}

Eigen::MatrixXd irm_mask_grad(const Eigen::VectorXd& grad_wave,
                              const Spectrogram& mix) {
  const Eigen::MatrixXcd gs =
      istft_adjoint(grad_wave, mix.frame_spec, mix.bins.cols());
  return (gs.cwiseProduct(mix.bins.conjugate())).real();
}

Eigen::MatrixXcd cirm_mask_grad(const Eigen::VectorXd& grad_wave,
                                const Spectrogram& mix) {
  const Eigen::MatrixXcd gs =
      istft_adjoint(grad_wave, mix.frame_spec, mix.bins.cols());
  return gs.cwiseProduct(mix.bins.conjugate());
}

Eigen::MatrixXd oracle_irm(const Spectrogram& target, const Spectrogram& mix,
                           double mag_clip) {
  if (target.bins.rows() != mix.bins.rows() || target.bins.cols() != mix.bins.cols())
    throw DataError("oracle mask shape mismatch");
  Eigen::MatrixXd out(mix.bins.rows(), mix.bins.cols());
  for (long t = 0; t < out.cols(); ++t)
    for (long f = 0; f < out.rows(); ++f) {
      const double denom = std::max(std::abs(mix.bins(f, t)), 1e-12);
      out(f, t) = std::min(std::abs(target.bins(f, t)) / denom, mag_clip);
    }
  return out;
}

Eigen::MatrixXcd oracle_cirm(const Spectrogram& target, const Spectrogram& mix,
                             double mag_clip) {
  if (target.bins.rows() != mix.bins.rows() || target.bins.cols() != mix.bins.cols())
    throw DataError("oracle mask shape mismatch");
  Eigen::MatrixXcd out(mix.bins.rows(), mix.bins.cols());
  for (long t = 0; t < out.cols(); ++t)
    for (long f = 0; f < out.rows(); ++f) {
      const std::complex<double> y = mix.bins(f, t);
      std::complex<double> m = target.bins(f, t) * std::conj(y) /
                               std::max(std::norm(y), 1e-12);
      const double mag = std::abs(m);
      if (mag > mag_clip) m *= mag_clip / mag;
      out(f, t) = m;
    }
  return out;
}

double hole_fraction(const Eigen::VectorXd& enhanced,
                     const Eigen::VectorXd& reference, const FrameSpec& spec,
                     double floor_ratio, double active_db) {
  if (enhanced.size() != reference.size())
    throw DataError("hole_fraction: length mismatch");
  const Spectrogram e = stft(enhanced, spec);
  const Spectrogram r = stft(reference, spec);
  const Eigen::MatrixXd em = e.bins.cwiseAbs();
  const Eigen::MatrixXd rm = r.bins.cwiseAbs();
  const double peak = rm.maxCoeff();
  if (peak <= 0.0) return 0.0;
  const double active_thresh = peak * std::pow(10.0, active_db / 20.0);
  long active = 0, holes = 0;
  for (long t = 0; t < rm.cols(); ++t)
    for (long f = 0; f < rm.rows(); ++f) {
      if (rm(f, t) <= active_thresh) continue;
      ++active;
      if (em(f, t) < floor_ratio * rm(f, t)) ++holes;
    }
  return active == 0 ? 0.0 : static_cast<double>(holes) / active;
}

}  // namespace mcse
