// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/channel.hpp"

#include <algorithm>
#include <cmath>
#include <boost/random/normal_distribution.hpp>

#include "ghostpeak/rng.hpp"

namespace ghostpeak {

namespace {
constexpr std::int64_t kNoiseBlock = 64;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t delay_samples(double delay_ps, double fs) { return std::llround(delay_ps * fs * 1e-12); }
}  // namespace

void ChannelModel::validate() const {
  if (taps.empty()) throw ConfigError("channel needs at least one tap");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (!(taps[i].delay_ps >= 0.0) || !std::isfinite(taps[i].delay_ps))
      throw ConfigError("tap delays must be >= 0");
    if (i > 0 && taps[i].delay_ps < taps[i - 1].delay_ps)
      throw ConfigError("taps must be sorted by delay");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
}

ChannelModel ChannelModel::scaled(Complex g) const {
  ChannelModel c = *this;
  for (auto& t : c.taps) t.gain *= g;
  return c;
}

ChannelModel los_channel(double distance_m, double noise_sigma, std::uint64_t seed) {
  if (!(distance_m > 0.0)) throw ConfigError("distance must be positive");
  ChannelModel c;
  c.taps = {Tap{ps_from_meters(distance_m), Complex{1.0 / distance_m, 0.0}}};
  c.noise_sigma = noise_sigma;
  c.seed = seed;
  return c;
}

void add_noise(std::span<Complex> buf, std::int64_t buf_first, std::int64_t begin, std::int64_t end,
               double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  begin = std::max(begin, buf_first);
  end = std::min(end, buf_first + static_cast<std::int64_t>(buf.size()));
  if (begin >= end) return;
  const double s = sigma / std::sqrt(2.0);
  boost::random::normal_distribution<double> nd(0.0, s);
  for (std::int64_t blk = floor_div(begin, kNoiseBlock); blk * kNoiseBlock < end; ++blk) {
    SplitMix64 g(mix_seed({seed, static_cast<std::uint64_t>(blk)}));
    nd.reset();
    const std::int64_t b0 = blk * kNoiseBlock;
    for (std::int64_t n = b0; n < b0 + kNoiseBlock; ++n) {
      const double re = nd(g);
      const double im = nd(g);
      if (n >= begin && n < end) buf[static_cast<std::size_t>(n - buf_first)] += Complex{re, im};
    }
  }
}

BasebandSignal apply_channel(const BasebandSignal& sig, const ChannelModel& ch) {
  ch.validate();
  validate_sample_rate(sig.sample_rate_hz);
  const double fs = sig.sample_rate_hz;
  const auto n = static_cast<std::int64_t>(sig.samples.size());
  const std::int64_t dmin = delay_samples(ch.taps.front().delay_ps, fs);
  std::int64_t dmax = dmin;
  for (const auto& t : ch.taps) dmax = std::max(dmax, delay_samples(t.delay_ps, fs));

  BasebandSignal out;
  out.sample_rate_hz = fs;
  out.t0_ps = sig.t0_ps;
  out.samples.assign(static_cast<std::size_t>(n + dmax), Complex{});
  for (const auto& t : ch.taps) {
    const std::int64_t d = delay_samples(t.delay_ps, fs);
    for (std::int64_t i = 0; i < n; ++i) out.samples[static_cast<std::size_t>(i + d)] += t.gain * sig.samples[static_cast<std::size_t>(i)];
  }
  const std::int64_t origin = std::llround(sig.t0_ps / sig.sample_period_ps());
  add_noise(out.samples, origin, origin + dmin, origin + n + dmax, ch.noise_sigma, ch.seed);
  return out;
}

BasebandSignal mix_samples(std::span<const MediumEvent> events, std::int64_t first, std::int64_t count,
                           double fs) {
  validate_sample_rate(fs);
  if (count < 0) throw ConfigError("negative window length");
  BasebandSignal out;
  out.sample_rate_hz = fs;
  out.t0_ps = static_cast<double>(first) * 1e12 / fs;
  out.samples.assign(static_cast<std::size_t>(count), Complex{});
  const double ts_ps = 1e12 / fs;

  for (const auto& ev : events) {
    ev.channel.validate();
    const std::int64_t origin = std::llround(ev.emit_time_ps / ts_ps);
    std::int64_t len = 0;
    if (const auto* bb = std::get_if<BasebandSignal>(&ev.signal)) {
      if (bb->sample_rate_hz != fs) throw ConfigError("mismatched sample rates in mix");
      len = static_cast<std::int64_t>(bb->samples.size());
      for (const auto& t : ev.channel.taps) {
        const std::int64_t start = origin + delay_samples(t.delay_ps, fs);
        const std::int64_t lo = std::max(first, start);
        const std::int64_t hi = std::min(first + count, start + len);
        for (std::int64_t k = lo; k < hi; ++k)
          out.samples[static_cast<std::size_t>(k - first)] += t.gain * bb->samples[static_cast<std::size_t>(k - start)];
      }
    } else {
      const auto& tr = std::get<PulseTrain>(ev.signal);
      if (tr.sample_rate_hz != fs) throw ConfigError("mismatched sample rates in mix");
      len = tr.length;
      for (const auto& t : ev.channel.taps)
        tr.accumulate(out.samples.data(), first, count, origin + delay_samples(t.delay_ps, fs), t.gain);
    }
    std::int64_t dmax = 0;
    for (const auto& t : ev.channel.taps) dmax = std::max(dmax, delay_samples(t.delay_ps, fs));
    const std::int64_t dmin = delay_samples(ev.channel.taps.front().delay_ps, fs);
    add_noise(out.samples, first, origin + dmin, origin + len + dmax, ev.channel.noise_sigma, ev.channel.seed);
  }
  return out;
}

BasebandSignal mix(std::span<const MediumEvent> events, TimeWindow window, double fs) {
  const double ts_ps = 1e12 / fs;
  const std::int64_t first = std::llround(window.start_ps / ts_ps);
  const std::int64_t count = std::llround(window.duration_ps / ts_ps);
  return mix_samples(events, first, count, fs);
}

}  // namespace ghostpeak
