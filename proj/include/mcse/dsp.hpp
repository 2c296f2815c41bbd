#pragma once

#include <Eigen/Dense>

#include "mcse/common.hpp"

namespace mcse {

/// Analysis/synthesis frame geometry of the fixed STFT encoder/decoder.
/// The square-root Hann pair satisfies constant-overlap-add at hop <=
/// kernel_size/2, which gives exact interior reconstruction.
struct FrameSpec {
  int kernel_size = 512;
  int hop = 256;
  int sample_rate = 16000;

  int num_bins() const { return kernel_size / 2 + 1; }
  long num_frames(long num_samples) const {
    return (num_samples - kernel_size) / hop + 1;
  }
  long reconstructable_samples(long num_frames) const {
    return (num_frames - 1) * static_cast<long>(hop) + kernel_size;
  }
  /// Samples the frame grid can resynthesize for an input of this length.
  long emitted_samples(long num_samples) const {
    return reconstructable_samples(num_frames(num_samples));
  }
  /// Square root of the periodic Hann window, used for both analysis and
  /// synthesis.
  Eigen::VectorXd window() const;

  void validate() const;
};

/// C x T sample matrix plus sample rate.
struct Wave {
  Eigen::MatrixXd samples;  // [channels x num_samples]
  int sample_rate = 16000;

  int channels() const { return static_cast<int>(samples.rows()); }
  long num_samples() const { return samples.cols(); }
  Eigen::VectorXd channel(int c) const { return samples.row(c).transpose(); }
};

/// F x N complex plane, F = kernel_size/2 + 1.
struct Spectrogram {
  Eigen::MatrixXcd bins;  // [F x N]
  FrameSpec frame_spec;

  int num_bins() const { return static_cast<int>(bins.rows()); }
  long num_frames() const { return bins.cols(); }
};

/// Windowed DFT of frames starting at multiples of hop (no center padding).
/// Errors with "insufficient samples" when the input is shorter than one
/// kernel.
Spectrogram stft(const Eigen::VectorXd& x, const FrameSpec& spec);

/// Synthesis-windowed overlap-add inverse, trimmed or zero-padded to
/// num_samples; samples past the reconstructable span come back as zeros.
Eigen::VectorXd istft(const Spectrogram& spec, long num_samples);

/// Element-wise modulus and argument in (-pi, pi]; zero bins get phase 0.
void magnitude_phase(const Spectrogram& spec, Eigen::MatrixXd* magnitude,
                     Eigen::MatrixXd* phase);

/// Adjoint of istft: maps d(loss)/d(waveform) back to d(loss)/d(bins),
/// with complex gradients in the d/dRe + i*d/dIm convention. Used by the
/// training path that backpropagates through the decoder.
Eigen::MatrixXcd istft_adjoint(const Eigen::VectorXd& grad_wave,
                               const FrameSpec& spec, long num_frames);

}  // namespace mcse
