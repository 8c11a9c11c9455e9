#pragma once

// Small text helpers shared by the writers: stable number formatting and a
// stable 64-bit hash for prompts and configs.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>

namespace behavbench {

/// Shortest representation that round-trips; integral values print without
/// a decimal point.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

/// At most 12 significant digits, which hides summation noise in reported
/// estimates (a self-comparison prints 0.5, not 0.5000000000000003).
inline std::string format_metric(double v) {
  if (!std::isfinite(v)) return format_number(v);
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.12g", v);
  std::string s(buf.data());
  if (s == "-0") s = "0";
  return s;
}

inline std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return format_number(v);
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  std::string s(buf.data());
  if (s.starts_with("-") && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
  return s;
}

/// FNV-1a, 64 bit.  Used where a hash must be identical across platforms
/// and standard library implementations.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf.data(), 16);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

} // namespace behavbench
