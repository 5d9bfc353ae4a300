#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace floodmob {

inline constexpr int kOutputDigits = 12;

/// Decimal text with `digits` significant digits (printf %g). glibc rounds the
/// exact binary value to nearest with ties to even, so output is byte-stable
/// for a given double.
inline std::string format_sig(double v, int digits = kOutputDigits) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// The value that format_sig prints, read back as a double.
inline double round_sig(double v, int digits = kOutputDigits) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_sig(v, digits).c_str(), nullptr);
}

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_shortest(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline const char* format_bool(bool b) { return b ? "true" : "false"; }

}  // namespace floodmob
