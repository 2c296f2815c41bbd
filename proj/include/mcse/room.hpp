#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mcse/dsp.hpp"

namespace mcse {

/// Uniform circular array in the horizontal plane.
struct ArrayGeometry {
  int num_mics = 6;
  double radius = 0.035;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  std::vector<Eigen::Vector3d> mic_positions() const;
};

struct RoomSpec {
  Eigen::Vector3d dims = Eigen::Vector3d(5.0, 4.0, 3.0);
  double rt60 = 0.3;
  double sound_speed = 343.0;
  int max_image_order = 20;

  double volume() const { return dims.x() * dims.y() * dims.z(); }
  double surface() const {
    return 2.0 * (dims.x() * dims.y() + dims.x() * dims.z() + dims.y() * dims.z());
  }
};

struct SceneSpec {
  RoomSpec room;
  ArrayGeometry array;
  Eigen::Vector3d target_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d interferer_pos = Eigen::Vector3d::Zero();
  double target_doa_deg = 0.0;
  double interferer_doa_deg = 0.0;
  double sir_db = 0.0;
  uint64_t seed = 0;
};

struct Rir {
  Eigen::MatrixXd taps;  // [num_mics x length]
  int sample_rate = 16000;
};

/// Uniform surface absorption from Sabine's relation 0.161*V/(S*RT60).
/// Values >= 1 are clamped just below 1 and reported through `clamped`
/// ("room too small for requested RT60").
double rt60_to_absorption(const RoomSpec& room, bool* clamped = nullptr);

/// Shoebox image-method RIR with fractional-delay windowed-sinc taps.
/// Images are limited both by total reflection order (room.max_image_order)
/// and by the RT60-derived tap-length cutoff (rt60 + 50 ms).
Rir simulate_rir(const RoomSpec& room, const Eigen::Vector3d& source,
                 const ArrayGeometry& mics, int sample_rate = 16000);

struct ScenePair {
  Wave mixture;        // [num_mics x T]
  Wave reverb_target;  // [num_mics x T], the training label before channel pick
};

/// Convolves both sources with their RIRs and rescales the interferer so the
/// reference-channel reverberant energy ratio matches scene.sir_db exactly.
ScenePair synthesize_scene(const SceneSpec& scene,
                           const Eigen::VectorXd& target_src,
                           const Eigen::VectorXd& interferer_src,
                           int sample_rate = 16000);

/// Draws a valid random scene: room in [3,3,2.5]..[8,10,6] m, RT60 in
/// [0.05,0.5] s, speaker distances in [1,5] m, DOAs in [0,360) deg, SIR in
/// {-6,0,6} dB, all wall clearances >= 0.3 m (by rejection).
SceneSpec sample_scene(uint64_t seed);

/// Absolute DOA difference wrapped to [0, 180] degrees.
double angle_difference_deg(const SceneSpec& scene);

}  // namespace mcse
