#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcse/adam.hpp"
#include "mcse/checkpoint.hpp"
#include "mcse/cldnn.hpp"
#include "mcse/dataset.hpp"
#include "mcse/dsp.hpp"
#include "mcse/features.hpp"
#include "mcse/tcn.hpp"

namespace mcse {

enum class Regime {
  BaseIrmSisnr,
  Sept1CirmSisnr,
  Sept2CirmMultitask,
  AmPretrain,
  Joint,
  JointFrozenAm,
};

Regime parse_regime(const std::string& name);  // throws UsageError with the list
std::string regime_name(Regime r);

struct TrainConfig {
  Regime regime = Regime::Sept1CirmSisnr;
  std::string train_manifest;
  std::string val_manifest;        // optional; empty disables validation
  std::string out_checkpoint;      // enhancement or AM checkpoint
  std::string out_am_checkpoint;   // joint regimes only
  std::string log_path;            // defaults to out_checkpoint + ".log.jsonl"
  std::string init_ckpt;           // warm start (e.g. clean AM for multi-cond)
  std::string enh_ckpt;            // joint: pretrained enhancement
  std::string am_ckpt;             // joint: pretrained acoustic model
  int epochs = 15;
  double lr = 1e-3;
  double alpha = 1.0;              // LFB-MSE weight for the multitask regime
  double aux_sisnr_weight = 0.0;   // joint: optional extra -SI-SNR term
  uint64_t seed = 0;
  bool deterministic = true;
  int max_utts = -1;               // truncate training set when > 0
  std::vector<std::string> am_conditions = {"clean", "reverb", "mixture", "enhanced"};
  TcnConfig tcn;
  CldnnConfig am;
  FrameSpec frame_spec;
  LfbSpec lfb;
};

struct TrainResult {
  double final_val_metric = 0.0;  // SI-SNR dB (enh) or CER (am/joint)
  double val_input_si_snr_db = 0.0;
  int epochs_run = 0;
};

TrainResult train_enhancement(const TrainConfig& cfg);
TrainResult train_am(const TrainConfig& cfg);
TrainResult joint_finetune(const TrainConfig& cfg);

/// Builds the network described by a checkpoint's manifest and loads weights.
TcnMaskNet enh_net_from_checkpoint(const Checkpoint& ckpt);
CldnnAm am_net_from_checkpoint(const Checkpoint& ckpt);
Checkpoint make_enh_checkpoint(TcnMaskNet& net, const TrainConfig& cfg);
Checkpoint make_am_checkpoint(CldnnAm& net, const TrainConfig& cfg);

/// Mask-enhances a 6-channel mixture toward the scene's target direction;
/// output length equals the mixture length (tail padded with zeros when the
/// frame grid falls short).
Eigen::VectorXd enhance_wave(TcnMaskNet& net, const Wave& mixture,
                             const SceneSpec& scene, const FrameSpec& fspec);

/// Writes <id>_enh.wav per utterance plus an augmented manifest
/// (out_dir/manifest.jsonl); returns the manifest path.
std::string enhance_corpus(const std::string& enh_ckpt_path,
                           const std::string& manifest_path,
                           const std::string& out_dir);

/// Greedy-decoded toy CER of an acoustic model over one waveform.
double utterance_cer(CldnnAm& am, const LogFbank& fbank, const Eigen::VectorXd& wave,
                     const std::vector<int>& labels);

}  // namespace mcse
