#include "mcse/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mcse/common.hpp"
#include "mcse/tensor_io.hpp"

namespace mcse {
namespace {
constexpr char kMagic[8] = {'M', 'C', 'S', 'E', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;
}  // namespace

int Checkpoint::meta_int(const std::string& key, int def) const {
  auto it = meta.find(key);
  return it == meta.end() ? def : std::stoi(it->second);
}

double Checkpoint::meta_double(const std::string& key, double def) const {
  auto it = meta.find(key);
  return it == meta.end() ? def : std::stod(it->second);
}

std::string Checkpoint::meta_str(const std::string& key, const std::string& def) const {
  auto it = meta.find(key);
  return it == meta.end() ? def : it->second;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    write_string(os, k);
    write_string(os, v);
  }
  write_u32(os, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    write_string(os, name);
    write_matrix(os, m);
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const uint32_t nmeta = read_u32(is);
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = read_string(is);
    ckpt.meta[k] = read_string(is);
  }
  const uint32_t ntens = read_u32(is);
  for (uint32_t i = 0; i < ntens; ++i) {
    std::string name = read_string(is);
    ckpt.tensors[name] = read_matrix(is);
  }
  return ckpt;
}

void pack_params(const std::vector<Param*>& params, Checkpoint* ckpt) {
  for (const Param* p : params) {
    if (ckpt->tensors.count(p->name))
      throw DataError("duplicate parameter name: " + p->name);
    ckpt->tensors[p->name] = p->value;
  }
}

void unpack_params(const Checkpoint& ckpt, const std::vector<Param*>& params) {
  for (Param* p : params) {
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end())
      throw DataError("checkpoint missing parameter: " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw DataError("checkpoint shape mismatch for " + p->name);
    p->value = it->second;
  }
}

}  // namespace mcse
