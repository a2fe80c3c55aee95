// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ghostpeak/phy.hpp"

namespace ghostpeak {

struct Tap {
  double delay_ps = 0.0;
  Complex gain{1.0, 0.0};

  bool operator==(const Tap&) const = default;
};

struct ChannelModel {
  std::vector<Tap> taps{Tap{}};
  double noise_sigma = 0.0;  // per-sample std of the complex noise (both parts together)
  std::uint64_t seed = 0;

  void validate() const;
  ChannelModel scaled(Complex g) const;
  bool operator==(const ChannelModel&) const = default;
};

/// Free-space style channel: single LoS tap at distance/c with amplitude 1/d (d in metres).
ChannelModel los_channel(double distance_m, double noise_sigma, std::uint64_t seed);

using Waveform = std::variant<BasebandSignal, PulseTrain>;

struct MediumEvent {
  Waveform signal;
  ChannelModel channel;
  double emit_time_ps = 0.0;
  std::uint16_t source_id = 0;
};

struct TimeWindow {
  double start_ps = 0.0;
  double duration_ps = 0.0;
};

BasebandSignal apply_channel(const BasebandSignal& sig, const ChannelModel& ch);

/// Renders only the requested window of the superposed medium.
BasebandSignal mix(std::span<const MediumEvent> events, TimeWindow window, double sample_rate_hz);

/// Same as mix but with the window given in absolute sample indices.
BasebandSignal mix_samples(std::span<const MediumEvent> events, std::int64_t first_sample,
                           std::int64_t count, double sample_rate_hz);

/// Adds noise for absolute samples [begin, end) clipped to the buffer that starts at buf_first.
/// The draw for a sample depends only on (seed, absolute index), so windows compose.
void add_noise(std::span<Complex> buf, std::int64_t buf_first, std::int64_t begin, std::int64_t end,
               double sigma, std::uint64_t seed);

}  // namespace ghostpeak
