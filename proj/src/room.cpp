#include "mcse/room.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "mcse/common.hpp"
#include "mcse/fft.hpp"

namespace mcse {
namespace {

constexpr int kSincHalfWidth = 40;  // 81-tap fractional-delay kernel

double windowed_sinc(double u) {
  // Hann-tapered sinc over |u| <= kSincHalfWidth + 1.
  const double support = kSincHalfWidth + 1.0;
  if (std::abs(u) >= support) return 0.0;
  const double w = 0.5 * (1.0 + std::cos(kPi * u / support));
  if (u == 0.0) return w;
  return w * std::sin(kPi * u) / (kPi * u);
}

}  // namespace

std::vector<Eigen::Vector3d> ArrayGeometry::mic_positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(num_mics);
  for (int m = 0; m < num_mics; ++m) {
    const double phi = 2.0 * kPi * m / num_mics;
    out.push_back(center + Eigen::Vector3d(radius * std::cos(phi),
                                           radius * std::sin(phi), 0.0));
  }
  return out;
}

double rt60_to_absorption(const RoomSpec& room, bool* clamped) {
  if (room.rt60 <= 0.0) throw DataError("rt60 must be positive");
  double alpha = 0.161 * room.volume() / (room.surface() * room.rt60);
  bool did_clamp = false;
  if (alpha >= 1.0) {
    did_clamp = true;
    std::fprintf(stderr,
                 "warning: room too small for requested RT60 (alpha=%.3f), "
                 "clamping absorption\n",
                 alpha);
    alpha = 1.0 - 1e-6;
  }
  if (clamped) *clamped = did_clamp;
  return alpha;
}

Rir simulate_rir(const RoomSpec& room, const Eigen::Vector3d& source,
                 const ArrayGeometry& mics, int sample_rate) {
  const auto mic_pos = mics.mic_positions();
  for (const auto& p : mic_pos) {
    if ((p - source).norm() < 0.01)
      throw DataError("source coincides with a microphone");
  }
  const double alpha = rt60_to_absorption(room, nullptr);
  const double beta = std::sqrt(1.0 - alpha);
  const double c = room.sound_speed;
  const double fs = sample_rate;

  // Tap-length cutoff: keep everything up to rt60 + 50 ms, but always cover
  // the direct path plus the sinc kernel tail.
  double max_direct = 0.0;
  for (const auto& p : mic_pos) max_direct = std::max(max_direct, (p - source).norm());
  long length = static_cast<long>(std::ceil((room.rt60 + 0.05) * fs));
  length = std::max(length,
                    static_cast<long>(std::ceil(max_direct / c * fs)) + 2 * kSincHalfWidth + 2);
  const double max_dist = (length + kSincHalfWidth) / fs * c;

  Rir rir;
  rir.sample_rate = sample_rate;
  rir.taps = Eigen::MatrixXd::Zero(static_cast<int>(mic_pos.size()), length);

  const Eigen::Vector3d L = room.dims;
  const int nx = static_cast<int>(std::ceil(max_dist / (2.0 * L.x()))) + 1;
  const int ny = static_cast<int>(std::ceil(max_dist / (2.0 * L.y()))) + 1;
  const int nz = static_cast<int>(std::ceil(max_dist / (2.0 * L.z()))) + 1;

  for (int mx = -nx; mx <= nx; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double xi = (1 - 2 * qx) * source.x() + 2.0 * mx * L.x();
      const int cx = std::abs(mx - qx) + std::abs(mx);
      if (cx > room.max_image_order) continue;
      for (int my = -ny; my <= ny; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double yi = (1 - 2 * qy) * source.y() + 2.0 * my * L.y();
          const int cy = std::abs(my - qy) + std::abs(my);
          if (cx + cy > room.max_image_order) continue;
          for (int mz = -nz; mz <= nz; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double zi = (1 - 2 * qz) * source.z() + 2.0 * mz * L.z();
              const int order = cx + cy + std::abs(mz - qz) + std::abs(mz);
              if (order > room.max_image_order) continue;
              const Eigen::Vector3d img(xi, yi, zi);
              const double gain_refl = std::pow(beta, order);
              for (size_t m = 0; m < mic_pos.size(); ++m) {
                const double dist = (img - mic_pos[m]).norm();
                if (dist > max_dist) continue;
                const double delay = dist / c * fs;
                const double amp = gain_refl / (4.0 * kPi * std::max(dist, 0.01));
                const long base = static_cast<long>(std::floor(delay));
                for (long n = base - kSincHalfWidth; n <= base + kSincHalfWidth; ++n) {
                  if (n < 0 || n >= length) continue;
                  rir.taps(static_cast<int>(m), n) += amp * windowed_sinc(n - delay);
                }
              }
            }
          }
        }
      }
    }
  }
  return rir;
}

ScenePair synthesize_scene(const SceneSpec& scene,
                           const Eigen::VectorXd& target_src,
                           const Eigen::VectorXd& interferer_src,
                           int sample_rate) {
  if (target_src.size() == 0 || interferer_src.size() == 0)
    throw DataError("empty source signal");
  const Rir rir_t = simulate_rir(scene.room, scene.target_pos, scene.array, sample_rate);
  const Rir rir_i = simulate_rir(scene.room, scene.interferer_pos, scene.array, sample_rate);
  const int M = scene.array.num_mics;
  const long T = target_src.size();

  Eigen::MatrixXd rev_t(M, T), rev_i(M, T);
  std::vector<double> x(target_src.data(), target_src.data() + target_src.size());
  std::vector<double> v(interferer_src.data(), interferer_src.data() + interferer_src.size());
  for (int m = 0; m < M; ++m) {
    std::vector<double> h_t(rir_t.taps.cols()), h_i(rir_i.taps.cols());
    for (long k = 0; k < rir_t.taps.cols(); ++k) h_t[k] = rir_t.taps(m, k);
    for (long k = 0; k < rir_i.taps.cols(); ++k) h_i[k] = rir_i.taps(m, k);
    std::vector<double> yt = fft_convolve(x, h_t, T);
    std::vector<double> yi = fft_convolve(v, h_i, T);
    for (long t = 0; t < T; ++t) {
      rev_t(m, t) = yt[t];
      rev_i(m, t) = yi[t];
    }
  }

  const double et = rev_t.row(0).squaredNorm();
  const double ei = rev_i.row(0).squaredNorm();
  if (et <= 0.0 || ei <= 0.0)
    throw DataError("zero-energy reverberant source; cannot set SIR");
  const double g = std::sqrt(et / (ei * std::pow(10.0, scene.sir_db / 10.0)));

  ScenePair out;
  out.mixture.sample_rate = sample_rate;
  out.mixture.samples = rev_t + g * rev_i;
  out.reverb_target.sample_rate = sample_rate;
  out.reverb_target.samples = std::move(rev_t);
  return out;
}

SceneSpec sample_scene(uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x5ce9e));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double clearance = 0.3;

  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneSpec s;
    s.seed = seed;
    s.room.dims = Eigen::Vector3d(3.0 + 5.0 * u01(rng), 3.0 + 7.0 * u01(rng),
                                  2.5 + 3.5 * u01(rng));
    s.room.rt60 = 0.05 + 0.45 * u01(rng);
    s.array.center = Eigen::Vector3d(
        clearance + s.array.radius +
            (s.room.dims.x() - 2.0 * (clearance + s.array.radius)) * u01(rng),
        clearance + s.array.radius +
            (s.room.dims.y() - 2.0 * (clearance + s.array.radius)) * u01(rng),
        clearance + (s.room.dims.z() - 2.0 * clearance) * u01(rng));

    auto place = [&](double* doa_deg, Eigen::Vector3d* pos) {
      for (int k = 0; k < 100; ++k) {
        const double doa = 360.0 * u01(rng);
        const double dist = 1.0 + 4.0 * u01(rng);
        const double th = doa * kPi / 180.0;
        Eigen::Vector3d p = s.array.center +
                            Eigen::Vector3d(dist * std::cos(th), dist * std::sin(th), 0.0);
        if (p.x() < clearance || p.x() > s.room.dims.x() - clearance) continue;
        if (p.y() < clearance || p.y() > s.room.dims.y() - clearance) continue;
        if (p.z() < clearance || p.z() > s.room.dims.z() - clearance) continue;
        *doa_deg = doa;
        *pos = p;
        return true;
      }
      return false;
    };
    if (!place(&s.target_doa_deg, &s.target_pos)) continue;
    if (!place(&s.interferer_doa_deg, &s.interferer_pos)) continue;

    const int sir_pick = static_cast<int>(3.0 * u01(rng));
    s.sir_db = (sir_pick <= 0) ? -6.0 : (sir_pick == 1 ? 0.0 : 6.0);
    return s;
  }
  throw DataError("failed to sample a valid scene");
}

double angle_difference_deg(const SceneSpec& scene) {
  double d = std::fmod(std::abs(scene.target_doa_deg - scene.interferer_doa_deg), 360.0);
  if (d > 180.0) d = 360.0 - d;
  return d;
}

}  // namespace mcse
