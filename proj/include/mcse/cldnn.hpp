#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mcse/nn_layers.hpp"

namespace mcse {

struct CldnnConfig {
  int num_mels = 40;
  int num_phones = 32;   // blank id == num_phones (last class)
  int conv1_maps = 8;
  int conv2_maps = 16;
  int lstm_layers = 2;
  int lstm_hidden = 128;

  int num_classes() const { return num_phones + 1; }
  int blank_id() const { return num_phones; }
};

/// Compact conv + LSTM + dense acoustic model over log-filterbank input,
/// emitting per-frame log class posteriors. Both 3x3 convolutions stride by
/// 2 in frequency and time, so the output rate is 1/4 of the feature rate.
class CldnnAm {
 public:
  CldnnAm() = default;
  CldnnAm(const CldnnConfig& cfg, uint64_t seed);

  /// lfb: [num_mels x T] -> log posteriors [num_classes x out_frames(T)].
  Eigen::MatrixXd forward(const Eigen::MatrixXd& lfb);
  /// grad w.r.t. log posteriors -> grad w.r.t. lfb input.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_logp);

  std::vector<Param*> params();
  const CldnnConfig& config() const { return cfg_; }
  long out_frames(long lfb_frames) const;

 private:
  CldnnConfig cfg_;
  RowCmvn cmvn_;
  Conv2d conv1_, conv2_;
  ReLU relu1_, relu2_, relu3_;
  std::vector<Lstm> lstms_;
  Linear fc1_, fc2_;
  LogSoftmax logsoftmax_;
  int freq_out_ = 0;  // frequency extent after the conv stack
};

}  // namespace mcse
