#pragma once

#include <charconv>
#include <string>

namespace timeagg {

/// Shortest representation that round-trips the exact double. Used everywhere
/// a float reaches a file so reruns are byte-identical.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Fixed-precision formatting for plot coordinates and report tables.
inline std::string format_fixed(double x, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

}  // namespace timeagg
