#include "timeagg/config.hpp"

#include <fstream>
#include <sstream>

#include "timeagg/errors.hpp"

namespace timeagg {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) {
    throw UsageError("missing required option '" + key + "'");
  }
  return it->second;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw UsageError("option '" + key + "': expected an integer, got '" + it->second + "'");
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw UsageError("option '" + key + "': expected a number, got '" + it->second + "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("option '" + key + "': expected a boolean, got '" + v + "'");
}

std::uint64_t RunConfig::get_seed(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw UsageError("option '" + key + "': expected a seed, got '" + it->second + "'");
  }
}

std::vector<double> RunConfig::get_fractions(const std::string& key,
                                             const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::string token;
  std::stringstream ss(it->second);
  while (std::getline(ss, token, ',')) {
    try {
      out.push_back(std::stod(trim(token)));
    } catch (const std::exception&) {
      throw UsageError("option '" + key + "': expected comma-separated numbers");
    }
  }
  if (out.empty()) throw UsageError("option '" + key + "': empty list");
  return out;
}

}  // namespace timeagg
