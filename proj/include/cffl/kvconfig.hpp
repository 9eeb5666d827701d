#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cffl {

/// Flat `section.key = value` configuration file: one entry per line,
/// `#` comments, comma-separated lists. Keys are case-sensitive.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;
  void set(const std::string& key, const std::string& value);

  /// FNV-1a over the canonical sorted key=value form; stable provenance tag.
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace cffl
