#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mcse/dsp.hpp"
#include "mcse/room.hpp"

namespace mcse {

/// Log power spectrum: log(max(|Y|^2, 1e-12)), shape [bins x frames].
Eigen::MatrixXd lps(const Spectrogram& spec);

/// Inter-channel phase difference arg(Ya * conj(Yb)); bins where either
/// magnitude is zero yield 0.
Eigen::MatrixXd ipd(const Spectrogram& a, const Spectrogram& b);

/// Microphone index pairs used for IPD/AF features (0-based).
const std::vector<std::pair<int, int>>& default_mic_pairs();

/// Expected far-field phase difference per pair and frequency bin for a
/// source at `doa_deg` in the array plane, shape [pairs x bins].
Eigen::MatrixXd steering_phases(const ArrayGeometry& array, double doa_deg,
                                const std::vector<std::pair<int, int>>& pairs,
                                const FrameSpec& spec,
                                double sound_speed = 343.0);

/// Angle feature: sum over pairs of cos(IPD - expected phase), in [-P, P].
Eigen::MatrixXd angle_feature(const std::vector<Eigen::MatrixXd>& ipds,
                              const Eigen::MatrixXd& steer);

std::vector<Spectrogram> stft_multichannel(const Wave& wave, const FrameSpec& spec);

/// Stacked network input: LPS(ch0) over IPDs over AF, [(2+P)*bins x frames].
struct FeaturePack {
  Eigen::MatrixXd rows;
  std::vector<Spectrogram> channel_specs;
};

FeaturePack compute_features(const Wave& mixture, double target_doa_deg,
                             const ArrayGeometry& array, const FrameSpec& spec);

/// 40-band HTK-style log mel filterbank, 25 ms / 10 ms, differentiable
/// back to the waveform.
struct LfbSpec {
  int win = 400;
  int hop = 160;
  int nfft = 512;
  int num_mels = 40;
  int sample_rate = 16000;
  // -40 dB power floor; keeps silent bands out of feature-space losses.
  double floor_eps = 1e-4;
};

class LogFbank {
 public:
  explicit LogFbank(LfbSpec spec = LfbSpec{});

  long num_frames(long num_samples) const;
  Eigen::MatrixXd forward(const Eigen::VectorXd& wave) const;  // [mels x frames]
  /// dL/dwave given dL/dlfb; recomputes forward intermediates.
  Eigen::VectorXd backward(const Eigen::VectorXd& wave,
                           const Eigen::MatrixXd& grad_lfb) const;

  const Eigen::MatrixXd& mel_weights() const { return mel_; }
  const LfbSpec& spec() const { return spec_; }

 private:
  LfbSpec spec_;
  Eigen::VectorXd window_;
  Eigen::MatrixXd mel_;  // [mels x bins]
};

}  // namespace mcse
