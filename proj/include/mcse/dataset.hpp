#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mcse/room.hpp"

namespace mcse {

struct Utterance {
  std::string id;
  std::string mixture_wav;        // 6-channel float32
  std::string reverb_target_wav;  // mono reference-channel reverberant target
  std::string clean_wav;          // mono dry target source
  std::string enhanced_wav;       // optional, filled by enhancement runs
  int speaker = -1;
  int interferer_speaker = -1;
  std::vector<int> labels;        // phoneme ids of the target stream
  SceneSpec scene;
};

struct Manifest {
  std::vector<Utterance> utts;

  /// Line-delimited JSON; relative WAV paths resolve against the manifest
  /// file's directory on load.
  static Manifest load(const std::string& path);
  void save(const std::string& path) const;
};

struct DatasetConfig {
  int n_train = 200;
  int n_val = 20;
  int n_test = 20;
  double utt_seconds = 2.0;
  int sample_rate = 16000;
  int num_phones = 32;
  int num_speakers = 24;       // built-in voices, split 16/4/4
  std::string source_corpus;   // optional dir of mono 16 kHz WAVs (one speaker each)
};

struct LabeledWave {
  Eigen::VectorXd wave;
  std::vector<int> labels;
};

/// Built-in pseudo-speech: a sequence of 140-260 ms segments, each a stack of
/// three formant clusters chosen by the segment's phoneme id, with a small
/// noise floor. speaker_scale shifts all formants multiplicatively.
LabeledWave synth_pseudo_speech(long num_samples, int sample_rate, int num_phones,
                                double speaker_scale, std::mt19937_64& rng);

double speaker_formant_scale(int speaker, int num_speakers);

/// Synthesizes the full corpus (WAVs plus train/val/test manifests) under
/// out_dir with speaker-disjoint splits.
void synth_dataset(const DatasetConfig& cfg, const std::string& out_dir,
                   uint64_t seed);

}  // namespace mcse
