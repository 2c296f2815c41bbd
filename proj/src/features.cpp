#include "mcse/features.hpp"

#include <cmath>
#include <complex>

#include "mcse/common.hpp"
#include "mcse/fft.hpp"

namespace mcse {

Eigen::MatrixXd lps(const Spectrogram& spec) {
  return (spec.bins.cwiseAbs2().cwiseMax(1e-12)).array().log().matrix();
}

Eigen::MatrixXd ipd(const Spectrogram& a, const Spectrogram& b) {
  if (a.bins.rows() != b.bins.rows() || a.bins.cols() != b.bins.cols())
    throw DataError("ipd: shape mismatch");
  Eigen::MatrixXd out(a.bins.rows(), a.bins.cols());
  for (long t = 0; t < a.bins.cols(); ++t) {
    for (long f = 0; f < a.bins.rows(); ++f) {
      const std::complex<double> p = a.bins(f, t) * std::conj(b.bins(f, t));
      out(f, t) = (p == std::complex<double>(0.0, 0.0)) ? 0.0 : std::arg(p);
    }
  }
  return out;
}

const std::vector<std::pair<int, int>>& default_mic_pairs() {
  static const std::vector<std::pair<int, int>> pairs = {
      {0, 3}, {1, 4}, {2, 5}, {0, 1}, {2, 3}, {4, 5}};
  return pairs;
}

Eigen::MatrixXd steering_phases(const ArrayGeometry& array, double doa_deg,
                                const std::vector<std::pair<int, int>>& pairs,
                                const FrameSpec& spec, double sound_speed) {
  const auto mics = array.mic_positions();
  const double th = doa_deg * kPi / 180.0;
  const Eigen::Vector3d u(std::cos(th), std::sin(th), 0.0);
  const int F = spec.num_bins();
  Eigen::MatrixXd out(static_cast<int>(pairs.size()), F);
  for (size_t k = 0; k < pairs.size(); ++k) {
    const double proj = (mics[pairs[k].first] - mics[pairs[k].second]).dot(u);
    for (int f = 0; f < F; ++f) {
      const double freq_hz = static_cast<double>(f) * spec.sample_rate / spec.kernel_size;
      out(static_cast<int>(k), f) = 2.0 * kPi * freq_hz * proj / sound_speed;
    }
  }
  return out;
}

Eigen::MatrixXd angle_feature(const std::vector<Eigen::MatrixXd>& ipds,
                              const Eigen::MatrixXd& steer) {
  if (ipds.empty()) throw DataError("angle_feature: no IPD maps");
  if (steer.rows() != static_cast<long>(ipds.size()))
    throw DataError("angle_feature: steering/pair count mismatch");
  const long F = ipds[0].rows(), N = ipds[0].cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(F, N);
  for (size_t k = 0; k < ipds.size(); ++k) {
    for (long t = 0; t < N; ++t)
      for (long f = 0; f < F; ++f)
        out(f, t) += std::cos(ipds[k](f, t) - steer(static_cast<long>(k), f));
  }
  return out;
}

std::vector<Spectrogram> stft_multichannel(const Wave& wave, const FrameSpec& spec) {
  std::vector<Spectrogram> out;
  out.reserve(wave.channels());
  for (int c = 0; c < wave.channels(); ++c) out.push_back(stft(wave.channel(c), spec));
  return out;
}

FeaturePack compute_features(const Wave& mixture, double target_doa_deg,
                             const ArrayGeometry& array, const FrameSpec& spec) {
  if (mixture.channels() != array.num_mics)
    throw DataError("compute_features: channel count does not match array");
  FeaturePack pack;
  pack.channel_specs = stft_multichannel(mixture, spec);
  const auto& pairs = default_mic_pairs();
  const long F = spec.num_bins();
  const long N = pack.channel_specs[0].bins.cols();

  std::vector<Eigen::MatrixXd> ipds;
  ipds.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    if (i >= mixture.channels() || j >= mixture.channels())
      throw DataError("compute_features: capture has too few channels for the mic pairs");
    ipds.push_back(ipd(pack.channel_specs[i], pack.channel_specs[j]));
  }
  const Eigen::MatrixXd steer = steering_phases(array, target_doa_deg, pairs, spec);

  pack.rows.resize((2 + static_cast<long>(pairs.size())) * F, N);
  pack.rows.topRows(F) = lps(pack.channel_specs[0]);
  for (size_t k = 0; k < pairs.size(); ++k)
    pack.rows.middleRows(F * (1 + static_cast<long>(k)), F) = ipds[k];
  pack.rows.bottomRows(F) = angle_feature(ipds, steer);
  return pack;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

Eigen::MatrixXd build_mel(const LfbSpec& s) {
  const int bins = s.nfft / 2 + 1;
  const double f_hi = s.sample_rate / 2.0;
  const double m_hi = hz_to_mel(f_hi);
  Eigen::VectorXd edges(s.num_mels + 2);
  for (int i = 0; i < s.num_mels + 2; ++i)
    edges(i) = m_hi * i / (s.num_mels + 1);
  Eigen::MatrixXd mel = Eigen::MatrixXd::Zero(s.num_mels, bins);
  for (int b = 0; b < bins; ++b) {
    const double m = hz_to_mel(static_cast<double>(b) * s.sample_rate / s.nfft);
    for (int j = 0; j < s.num_mels; ++j) {
      double w = 0.0;
      if (m >= edges(j) && m <= edges(j + 1) && edges(j + 1) > edges(j))
        w = (m - edges(j)) / (edges(j + 1) - edges(j));
      else if (m > edges(j + 1) && m <= edges(j + 2) && edges(j + 2) > edges(j + 1))
        w = (edges(j + 2) - m) / (edges(j + 2) - edges(j + 1));
      mel(j, b) = w;
    }
  }
  return mel;
}

}  // namespace

LogFbank::LogFbank(LfbSpec spec) : spec_(spec) {
  if (spec_.win <= 0 || spec_.hop <= 0 || spec_.nfft < spec_.win)
    throw DataError("invalid filterbank spec");
  window_.resize(spec_.win);
  for (int n = 0; n < spec_.win; ++n)
    window_(n) = 0.5 * (1.0 - std::cos(2.0 * kPi * n / spec_.win));
  mel_ = build_mel(spec_);
}

long LogFbank::num_frames(long num_samples) const {
  if (num_samples < spec_.win) return 0;
  return (num_samples - spec_.win) / spec_.hop + 1;
}

Eigen::MatrixXd LogFbank::forward(const Eigen::VectorXd& wave) const {
  const long N = num_frames(wave.size());
  if (N == 0) throw DataError("waveform shorter than one analysis window");
  const RealFft& fft = fft_for(spec_.nfft);
  const int bins = spec_.nfft / 2 + 1;
  Eigen::MatrixXd out(spec_.num_mels, N);
  std::vector<double> frame(spec_.nfft);
  std::vector<std::complex<double>> z(bins);
  Eigen::VectorXd power(bins);
  for (long t = 0; t < N; ++t) {
    const long off = t * spec_.hop;
    for (int n = 0; n < spec_.win; ++n) frame[n] = wave(off + n) * window_(n);
    std::fill(frame.begin() + spec_.win, frame.end(), 0.0);
    fft.forward(frame.data(), z.data());
    for (int b = 0; b < bins; ++b) power(b) = std::norm(z[b]);
    out.col(t) = (mel_ * power).cwiseMax(spec_.floor_eps).array().log();
  }
  return out;
}

Eigen::VectorXd LogFbank::backward(const Eigen::VectorXd& wave,
                                   const Eigen::MatrixXd& grad_lfb) const {
  const long N = num_frames(wave.size());
  if (grad_lfb.rows() != spec_.num_mels || grad_lfb.cols() != N)
    throw DataError("grad shape mismatch in filterbank backward");
  const RealFft& fft = fft_for(spec_.nfft);
  const int bins = spec_.nfft / 2 + 1;
  Eigen::VectorXd grad_wave = Eigen::VectorXd::Zero(wave.size());
  std::vector<double> frame(spec_.nfft), gframe(spec_.nfft);
  std::vector<std::complex<double>> z(bins), gz(bins);
  Eigen::VectorXd power(bins);
  for (long t = 0; t < N; ++t) {
    const long off = t * spec_.hop;
    for (int n = 0; n < spec_.win; ++n) frame[n] = wave(off + n) * window_(n);
    std::fill(frame.begin() + spec_.win, frame.end(), 0.0);
    fft.forward(frame.data(), z.data());
    for (int b = 0; b < bins; ++b) power(b) = std::norm(z[b]);
    Eigen::VectorXd melpow = mel_ * power;
    Eigen::VectorXd gmel(spec_.num_mels);
    for (int j = 0; j < spec_.num_mels; ++j)
      gmel(j) = melpow(j) > spec_.floor_eps ? grad_lfb(j, t) / melpow(j) : 0.0;
    Eigen::VectorXd gpow = mel_.transpose() * gmel;
    // Adjoint of the unnormalized r2c: halve interior bins, then c2r.
    for (int b = 0; b < bins; ++b) {
      const double scale = (b == 0 || b == bins - 1) ? 1.0 : 0.5;
      gz[b] = scale * 2.0 * gpow(b) * z[b];  // d|z|^2 = 2(re,im)
    }
    gz[0].imag(0.0);
    gz[bins - 1].imag(0.0);
    fft.inverse(gz.data(), gframe.data());
    for (int n = 0; n < spec_.win; ++n)
      grad_wave(off + n) += gframe[n] * window_(n);
  }
  return grad_wave;
}

}  // namespace mcse
