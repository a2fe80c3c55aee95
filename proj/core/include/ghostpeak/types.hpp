// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ghostpeak {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPrfHz = 64e6;
inline constexpr double kDefaultSampleRateHz = 2.048e9;
inline constexpr double kDefaultTickPs = 15.65;
inline constexpr double kMinSampleRateHz = 2.0 * 499.2e6;

inline constexpr double meters_from_ps(double ps) { return kSpeedOfLight * ps * 1e-12; }
inline constexpr double ps_from_meters(double m) { return m / kSpeedOfLight * 1e12; }

/// Raised for invalid knobs or malformed configuration input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when timing inputs violate a formula's precondition.
class MeasurementError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Trace decoding failure; offset is the byte position where parsing stopped.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace ghostpeak
