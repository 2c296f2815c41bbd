#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "mcse/nn_layers.hpp"

namespace mcse {

/// Versioned named-tensor container with a string-keyed hyperparameter
/// manifest. Maps keep serialization order deterministic.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, Eigen::MatrixXd> tensors;

  int meta_int(const std::string& key, int def) const;
  double meta_double(const std::string& key, double def) const;
  std::string meta_str(const std::string& key, const std::string& def = "") const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Copies parameter values into / out of a checkpoint by name.
void pack_params(const std::vector<Param*>& params, Checkpoint* ckpt);
void unpack_params(const Checkpoint& ckpt, const std::vector<Param*>& params);

}  // namespace mcse
