#pragma once

#include <string>
#include <vector>

#include "mcse/dsp.hpp"

namespace mcse {

struct EvalConfig {
  std::string manifest;
  std::string enh_ckpt;     // empty: score the unprocessed mixture
  std::string am_ckpt;      // empty: no CER column
  std::string report_path;  // line-delimited JSON
  double hole_floor_ratio = 0.1;
  double hole_active_db = -40.0;
  FrameSpec frame_spec;
};

struct UttReport {
  std::string utt_id;
  double sir_db = 0.0;
  double angle_diff_deg = 0.0;
  double si_snr_in = 0.0;
  double si_snr_out = 0.0;
  double sdr_out = 0.0;
  double hole_fraction = 0.0;
  double cer = -1.0;  // negative when no acoustic model was given
};

/// Scores every utterance and writes per-utterance rows followed by
/// aggregate rows bucketed by SIR {-6,0,6} and angle difference
/// {0-15, 15-45, 45-90, 90-180} degrees.
std::vector<UttReport> evaluate_corpus(const EvalConfig& cfg);

/// Bucket index 0..3 for an angle difference in [0, 180].
int angle_bucket(double angle_diff_deg);
const char* angle_bucket_name(int bucket);

}  // namespace mcse
