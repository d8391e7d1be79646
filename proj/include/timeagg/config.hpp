#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace timeagg {

/// Flat key=value run configuration. '#' starts a comment; values are
/// unquoted. CLI flags override file keys via set().
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  /// Comma-separated list of reals, e.g. "0.638,0.161,0.201".
  std::vector<double> get_fractions(const std::string& key,
                                    const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace timeagg
