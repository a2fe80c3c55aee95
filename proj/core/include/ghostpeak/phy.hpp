// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ghostpeak/types.hpp"

namespace ghostpeak {

enum class PulseKind { root_raised_cosine, gaussian_monopulse, rectangular };

struct PulseShape {
  PulseKind kind = PulseKind::root_raised_cosine;
  double duration_s = 2e-9;
  int samples_per_pulse = 4;

  void validate() const;
  bool operator==(const PulseShape&) const = default;
};

/// Real pulse samples at the given rate, scaled so that sum(p^2) * Ts[ns] == 1.
std::vector<double> pulse_samples(const PulseShape& shape, double sample_rate_hz);

struct StsConfig {
  std::array<std::uint8_t, 16> key{};
  std::array<std::uint8_t, 12> upper96{};
  std::uint32_t counter = 0;
  int length_bits = 4096;

  void validate() const;
  bool operator==(const StsConfig&) const = default;
};

/// Counter-mode keystream bits. Block i encrypts upper96 || BE32(counter + i);
/// bits are taken MSB first starting at byte 0 of each block.
std::vector<std::uint8_t> generate_sts_bits(const StsConfig& cfg);

struct FieldAmplitudes {
  double preamble = 1.0;
  double sfd = 1.0;
  double sts = 1.0;
  double data = 1.0;

  bool operator==(const FieldAmplitudes&) const = default;
};

enum class Field { preamble, sfd, sts, data };

struct HrpPacketSpec {
  std::vector<std::int8_t> preamble_code;
  int preamble_repetitions = 64;
  // Each SFD element spreads one full preamble symbol.
  std::vector<std::int8_t> sfd;
  std::optional<StsConfig> sts;
  std::vector<std::uint8_t> data_bits;
  int pulses_per_data_bit = 64;
  FieldAmplitudes amplitudes;

  static constexpr double prf_hz = kPrfHz;

  void validate() const;

  std::int64_t slot_count(Field f) const;
  std::int64_t slot_begin(Field f) const;
  std::int64_t total_slots() const;
  /// Slot index of the timestamp reference: the first STS slot (end of SFD if no STS).
  std::int64_t rmarker_slot() const { return slot_begin(Field::sts); }
};

/// Seeded length-N ternary code; the best of a few candidates by periodic sidelobe level.
std::vector<std::int8_t> make_preamble_code(std::uint64_t seed, int length = 127);
std::vector<std::int8_t> default_sfd();

struct BasebandSignal {
  std::vector<Complex> samples;
  double sample_rate_hz = kDefaultSampleRateHz;
  double t0_ps = 0.0;

  double sample_period_ps() const { return 1e12 / sample_rate_hz; }
  double duration_ps() const { return static_cast<double>(samples.size()) * sample_period_ps(); }
};

/// First sample of PRF slot k at the given rate.
std::int64_t slot_sample(std::int64_t slot, double sample_rate_hz);

/// Sparse pulse-level waveform: one real amplitude per emitted pulse.
struct PulseTrain {
  std::vector<std::int64_t> offsets;  // first sample of each pulse, ascending
  std::vector<double> amplitudes;
  std::vector<double> pulse;
  std::int64_t length = 0;
  double sample_rate_hz = kDefaultSampleRateHz;

  std::size_t size() const { return offsets.size(); }
  BasebandSignal render(double t0_ps = 0.0) const;
  /// out[i] += gain * train[out_begin + i - start] for every i in [0, out_len).
  void accumulate(Complex* out, std::int64_t out_begin, std::int64_t out_len, std::int64_t start,
                  Complex gain) const;
  double energy() const;
};

PulseTrain pulse_train(const HrpPacketSpec& spec, const PulseShape& shape, double sample_rate_hz);
/// Unit-gain pulses of one field, offsets relative to the field's first slot.
PulseTrain field_train(const HrpPacketSpec& spec, Field field, const PulseShape& shape,
                       double sample_rate_hz);
/// One unit-gain preamble symbol.
PulseTrain symbol_train(const std::vector<std::int8_t>& code, const PulseShape& shape,
                        double sample_rate_hz);

BasebandSignal modulate_packet(const HrpPacketSpec& spec, const PulseShape& shape,
                               double sample_rate_hz);
BasebandSignal local_template(const HrpPacketSpec& spec, Field field, const PulseShape& shape,
                              double sample_rate_hz);

void validate_sample_rate(double sample_rate_hz);

}  // namespace ghostpeak
