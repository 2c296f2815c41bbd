#include "mcse/dsp.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "mcse/fft.hpp"

namespace mcse {

void FrameSpec::validate() const {
  if (kernel_size <= 0) throw DataError("kernel_size must be positive");
  if (hop <= 0 || hop > kernel_size) throw DataError("hop must be in (0, kernel_size]");
  if (kernel_size % 2 != 0) throw DataError("kernel_size must be even");
  if (sample_rate <= 0) throw DataError("sample_rate must be positive");
  if (2 * hop > kernel_size)
    throw DataError("sqrt-Hann pair requires hop <= kernel_size/2 for overlap-add");
}

Eigen::VectorXd FrameSpec::window() const {
  Eigen::VectorXd w(kernel_size);
  for (int n = 0; n < kernel_size; ++n) {
    const double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * n / kernel_size));
    w[n] = std::sqrt(hann);
  }
  return w;
}

Spectrogram stft(const Eigen::VectorXd& x, const FrameSpec& spec) {
  spec.validate();
  const int k = spec.kernel_size;
  if (x.size() < k) throw DataError("insufficient samples: input shorter than one frame");
  const long n_frames = spec.num_frames(x.size());
  const int f_bins = spec.num_bins();
  const Eigen::VectorXd w = spec.window();
  const RealFft& fft = fft_for(k);

  Spectrogram out;
  out.frame_spec = spec;
  out.bins.resize(f_bins, n_frames);
  std::vector<double> frame(static_cast<size_t>(k));
  for (long t = 0; t < n_frames; ++t) {
    const long off = t * spec.hop;
    for (int n = 0; n < k; ++n) frame[n] = x[off + n] * w[n];
    fft.forward(frame.data(), out.bins.col(t).data());
  }
  return out;
}

Eigen::VectorXd istft(const Spectrogram& spec, long num_samples) {
  spec.frame_spec.validate();
  const FrameSpec& fs = spec.frame_spec;
  const int k = fs.kernel_size;
  if (spec.num_bins() != fs.num_bins())
    throw DataError("spectrogram bin count inconsistent with frame spec");
  const long n_frames = spec.num_frames();
  const long span = fs.reconstructable_samples(n_frames);
  const Eigen::VectorXd w = fs.window();
  const RealFft& fft = fft_for(k);
  const double inv_k = 1.0 / k;

  Eigen::VectorXd y = Eigen::VectorXd::Zero(span);
  std::vector<std::complex<double>> col(static_cast<size_t>(fs.num_bins()));
  std::vector<double> frame(static_cast<size_t>(k));
  for (long t = 0; t < n_frames; ++t) {
    for (int f = 0; f < fs.num_bins(); ++f) col[f] = spec.bins(f, t);
    // DC and Nyquist of a real signal are real; drop non-physical parts.
    col[0] = std::complex<double>(col[0].real(), 0.0);
    col[fs.num_bins() - 1] = std::complex<double>(col[fs.num_bins() - 1].real(), 0.0);
    fft.inverse(col.data(), frame.data());
    const long off = t * fs.hop;
    for (int n = 0; n < k; ++n) y[off + n] += frame[n] * inv_k * w[n];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_samples);
  out.head(std::min(num_samples, span)) = y.head(std::min(num_samples, span));
  return out;
}

void magnitude_phase(const Spectrogram& spec, Eigen::MatrixXd* magnitude,
                     Eigen::MatrixXd* phase) {
  const long f = spec.bins.rows(), n = spec.bins.cols();
  magnitude->resize(f, n);
  phase->resize(f, n);
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i < f; ++i) {
      const std::complex<double> z = spec.bins(i, j);
      const double m = std::abs(z);
      (*magnitude)(i, j) = m;
      double p = (m == 0.0) ? 0.0 : std::atan2(z.imag(), z.real());
      if (p <= -kPi) p = kPi;  // keep argument in (-pi, pi]
      (*phase)(i, j) = p;
    }
  }
}

Eigen::MatrixXcd istft_adjoint(const Eigen::VectorXd& grad_wave,
                               const FrameSpec& spec, long num_frames) {
  spec.validate();
  const int k = spec.kernel_size;
  const int f_bins = spec.num_bins();
  const long span = spec.reconstructable_samples(num_frames);
  const Eigen::VectorXd w = spec.window();
  const RealFft& fft = fft_for(k);
  const double inv_k = 1.0 / k;

  // istft restricted to num_samples is the head of the overlap-added span;
  // gradients past the emitted samples are zero.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(span);
  const long n_copy = std::min<long>(grad_wave.size(), span);
  g.head(n_copy) = grad_wave.head(n_copy);

  Eigen::MatrixXcd grad_bins(f_bins, num_frames);
  std::vector<double> seg(static_cast<size_t>(k));
  std::vector<std::complex<double>> z(static_cast<size_t>(f_bins));
  for (long t = 0; t < num_frames; ++t) {
    const long off = t * spec.hop;
    for (int n = 0; n < k; ++n) seg[n] = g[off + n] * w[n] * inv_k;
    fft.forward(seg.data(), z.data());
    for (int f = 0; f < f_bins; ++f) {
      // Interior bins appear twice in the hermitian spectrum of a real
      // frame, so their sensitivities double.
      const double c = (f == 0 || f == f_bins - 1) ? 1.0 : 2.0;
      grad_bins(f, t) = c * z[f];
    }
    // Imaginary parts of DC/Nyquist are discarded by the synthesis.
    grad_bins(0, t) = std::complex<double>(grad_bins(0, t).real(), 0.0);
    grad_bins(f_bins - 1, t) = std::complex<double>(grad_bins(f_bins - 1, t).real(), 0.0);
  }
  return grad_bins;
}

}  // namespace mcse
