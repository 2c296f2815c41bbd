#pragma once

#include <map>
#include <string>

namespace mcse {

/// Flat key=value configuration ('#' comments, blank lines ignored).
class KvConfig {
 public:
  static KvConfig load(const std::string& path);
  static KvConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key, const std::string& def) const;
  int get_int(const std::string& key, int def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;

  std::string serialize() const;  // sorted keys, one per line
  void save(const std::string& path) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mcse
