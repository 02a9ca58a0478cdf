#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>

#include "blink/errors.hpp"

namespace blink {

// Sizes are integer bytes throughout; scales are decimal reals with the
// convention that the full input corresponds to scale 1000.
using Bytes = std::uint64_t;

inline constexpr double kFullScale = 1000.0;

inline Bytes ceil_div(Bytes value, Bytes divisor) {
  return (value + divisor - 1) / divisor;
}

// Half-up rounding of a non-negative real quantity to whole bytes.
inline Bytes round_bytes(double value) {
  if (value <= 0.0) return 0;
  return static_cast<Bytes>(std::floor(value + 0.5));
}

inline std::int64_t round_half_up(double value) {
  return static_cast<std::int64_t>(std::floor(value + 0.5));
}

// Accepts plain byte counts and human units with powers-of-1024 suffixes:
// "1073741824", "64M", "1.5G", "314K", "1T", optionally with a trailing "B"
// or "iB" ("64MiB").
inline Bytes parse_bytes(const std::string& text) {
  if (text.empty()) throw Error(Errc::empty_input, "empty byte quantity");
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw Error(Errc::invalid_config, "bad byte quantity: " + text);
  }
  if (value < 0.0) throw Error(Errc::invalid_config, "negative byte quantity: " + text);

  std::string suffix = text.substr(pos);
  while (!suffix.empty() && std::isspace(static_cast<unsigned char>(suffix.front()))) suffix.erase(0, 1);
  double factor = 1.0;
  if (!suffix.empty()) {
    switch (std::toupper(static_cast<unsigned char>(suffix.front()))) {
      case 'K': factor = 1024.0; break;
      case 'M': factor = 1024.0 * 1024.0; break;
      case 'G': factor = 1024.0 * 1024.0 * 1024.0; break;
      case 'T': factor = 1024.0 * 1024.0 * 1024.0 * 1024.0; break;
      case 'B': factor = 1.0; break;
      default: throw Error(Errc::invalid_config, "unknown byte unit: " + text);
    }
    std::string rest = suffix.substr(1);
    if (!(rest.empty() || rest == "B" || rest == "b" || rest == "iB" || rest == "ib")) {
      throw Error(Errc::invalid_config, "unknown byte unit: " + text);
    }
  }
  return round_bytes(value * factor);
}

inline std::string format_bytes(Bytes value) {
  static const char* units[] = {"B", "KiB", "MiB", "GiB", "TiB"};
  double v = static_cast<double>(value);
  int unit = 0;
  while (v >= 1024.0 && unit < 4) {
    v /= 1024.0;
    ++unit;
  }
  char buf[48];
  if (unit == 0) {
    std::snprintf(buf, sizeof(buf), "%llu B", static_cast<unsigned long long>(value));
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f %s", v, units[unit]);
  }
  return buf;
}

}  // namespace blink
