// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/phy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ghostpeak/aes128.hpp"
#include "ghostpeak/rng.hpp"

namespace ghostpeak {

void validate_sample_rate(double fs) {
  if (!std::isfinite(fs) || fs < kMinSampleRateHz)
    throw ConfigError("sample rate must be at least 998.4 MHz");
}

void PulseShape::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw ConfigError("pulse duration must be positive");
  if (samples_per_pulse < 2) throw ConfigError("samples_per_pulse must be >= 2");
}

namespace {

double rrc(double t, double T, double beta) {
  const double x = t / T;
  if (std::abs(x) < 1e-12) return 1.0 - beta + 4.0 * beta / std::numbers::pi;
  const double sing = 1.0 / (4.0 * beta);
  if (std::abs(std::abs(x) - sing) < 1e-9) {
    const double a = std::numbers::pi / (4.0 * beta);
    return beta / std::sqrt(2.0) * ((1.0 + 2.0 / std::numbers::pi) * std::sin(a) +
                                    (1.0 - 2.0 / std::numbers::pi) * std::cos(a));
  }
  const double num = std::sin(std::numbers::pi * x * (1.0 - beta)) +
                     4.0 * beta * x * std::cos(std::numbers::pi * x * (1.0 + beta));
  const double den = std::numbers::pi * x * (1.0 - (4.0 * beta * x) * (4.0 * beta * x));
  return num / den;
}

}  // namespace

std::vector<double> pulse_samples(const PulseShape& shape, double fs) {
  shape.validate();
  validate_sample_rate(fs);
  const int n = shape.samples_per_pulse;
  const double ts_ns = 1e9 / fs;
  const double dur_ns = shape.duration_s * 1e9;
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double t = (j - 0.5 * (n - 1)) * ts_ns;
    switch (shape.kind) {
      case PulseKind::rectangular:
        p[j] = 1.0;
        break;
      case PulseKind::root_raised_cosine:
        // Main lobe (zero to zero) spans roughly the configured duration.
        p[j] = rrc(t, 0.5 * dur_ns, 0.5);
        break;
      case PulseKind::gaussian_monopulse: {
        const double tau = dur_ns / 4.0;
        p[j] = (t / tau) * std::exp(-0.5 * (t / tau) * (t / tau));
        break;
      }
    }
  }
  double e = 0.0;
  for (double v : p) e += v * v;
  e *= ts_ns;
  if (!(e > 0.0)) throw ConfigError("pulse shape has zero energy at this sample rate");
  const double k = 1.0 / std::sqrt(e);
  for (double& v : p) v *= k;
  return p;
}

void StsConfig::validate() const {
  if (length_bits <= 0 || length_bits % 128 != 0)
    throw ConfigError("STS length_bits must be a positive multiple of 128");
}

std::vector<std::uint8_t> generate_sts_bits(const StsConfig& cfg) {
  cfg.validate();
  const Aes128 aes(cfg.key);
  std::vector<std::uint8_t> bits;
  bits.reserve(static_cast<std::size_t>(cfg.length_bits));
  const int blocks = cfg.length_bits / 128;
  Aes128::Block pt{};
  std::copy(cfg.upper96.begin(), cfg.upper96.end(), pt.begin());
  for (int b = 0; b < blocks; ++b) {
    const std::uint32_t ctr = cfg.counter + static_cast<std::uint32_t>(b);
    pt[12] = static_cast<std::uint8_t>(ctr >> 24);
    pt[13] = static_cast<std::uint8_t>(ctr >> 16);
    pt[14] = static_cast<std::uint8_t>(ctr >> 8);
    pt[15] = static_cast<std::uint8_t>(ctr);
    const auto ct = aes.encrypt(pt);
    for (std::uint8_t byte : ct)
      for (int k = 7; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>((byte >> k) & 1U));
  }
  return bits;
}

void HrpPacketSpec::validate() const {
  if (preamble_code.empty()) throw ConfigError("preamble code is empty");
  auto ternary = [](const std::vector<std::int8_t>& v) {
    return std::all_of(v.begin(), v.end(), [](std::int8_t x) { return x >= -1 && x <= 1; });
  };
  if (!ternary(preamble_code) || !ternary(sfd)) throw ConfigError("codes must be ternary");
  if (std::all_of(preamble_code.begin(), preamble_code.end(), [](std::int8_t x) { return x == 0; }))
    throw ConfigError("preamble code has no pulses");
  if (preamble_repetitions < 1) throw ConfigError("preamble_repetitions must be >= 1");
  if (pulses_per_data_bit < 1) throw ConfigError("pulses_per_data_bit must be >= 1");
  for (double g : {amplitudes.preamble, amplitudes.sfd, amplitudes.sts, amplitudes.data})
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("field gains must be finite and >= 0");
  for (auto b : data_bits)
    if (b > 1) throw ConfigError("data bits must be 0 or 1");
  if (sts) sts->validate();
}

std::int64_t HrpPacketSpec::slot_count(Field f) const {
  const auto n = static_cast<std::int64_t>(preamble_code.size());
  switch (f) {
    case Field::preamble:
      return n * preamble_repetitions;
    case Field::sfd:
      return n * static_cast<std::int64_t>(sfd.size());
    case Field::sts:
      return sts ? sts->length_bits : 0;
    case Field::data:
      return static_cast<std::int64_t>(data_bits.size()) * pulses_per_data_bit;
  }
  return 0;
}

std::int64_t HrpPacketSpec::slot_begin(Field f) const {
  std::int64_t s = 0;
  for (Field g : {Field::preamble, Field::sfd, Field::sts, Field::data}) {
    if (g == f) return s;
    s += slot_count(g);
  }
  return s;
}

std::int64_t HrpPacketSpec::total_slots() const { return slot_begin(Field::data) + slot_count(Field::data); }

std::vector<std::int8_t> make_preamble_code(std::uint64_t seed, int length) {
  if (length < 2) throw ConfigError("preamble code length must be >= 2");
  std::vector<std::int8_t> best;
  long best_side = -1;
  for (int cand = 0; cand < 32; ++cand) {
    SplitMix64 g(mix_seed({seed, static_cast<std::uint64_t>(cand)}));
    std::vector<std::int8_t> c(static_cast<std::size_t>(length));
    for (auto& x : c) {
      const auto r = g() % 4;  // half the chips carry a pulse
      x = r == 0 ? std::int8_t{1} : (r == 1 ? std::int8_t{-1} : std::int8_t{0});
    }
    long side = 0;
    for (int lag = 1; lag < length; ++lag) {
      long acc = 0;
      for (int i = 0; i < length; ++i) acc += c[i] * c[(i + lag) % length];
      side = std::max(side, std::abs(acc));
    }
    long weight = 0;
    for (auto x : c) weight += x * x;
    if (weight == 0) continue;
    if (best_side < 0 || side < best_side) {
      best_side = side;
      best = std::move(c);
    }
  }
  return best;
}

std::vector<std::int8_t> default_sfd() { return {0, 1, 0, -1, 1, 0, 0, -1}; }

std::int64_t slot_sample(std::int64_t slot, double fs) {
  return std::llround(static_cast<double>(slot) * fs / kPrfHz);
}

BasebandSignal PulseTrain::render(double t0_ps) const {
  BasebandSignal out;
  out.sample_rate_hz = sample_rate_hz;
  out.t0_ps = t0_ps;
  out.samples.assign(static_cast<std::size_t>(length), Complex{});
  accumulate(out.samples.data(), 0, length, 0, Complex{1.0, 0.0});
  return out;
}

void PulseTrain::accumulate(Complex* out, std::int64_t out_begin, std::int64_t out_len,
                            std::int64_t start, Complex gain) const {
  const auto plen = static_cast<std::int64_t>(pulse.size());
  // Local coordinates of the output window.
  const std::int64_t lo = out_begin - start;
  const std::int64_t hi = lo + out_len;
  auto it = std::lower_bound(offsets.begin(), offsets.end(), lo - plen + 1);
  for (; it != offsets.end() && *it < hi; ++it) {
    const auto k = static_cast<std::size_t>(it - offsets.begin());
    const Complex a = gain * amplitudes[k];
    const std::int64_t j0 = std::max<std::int64_t>(0, lo - *it);
    const std::int64_t j1 = std::min<std::int64_t>(plen, hi - *it);
    for (std::int64_t j = j0; j < j1; ++j) out[*it + j - lo] += a * pulse[static_cast<std::size_t>(j)];
  }
}

double PulseTrain::energy() const {
  double pe = 0.0;
  for (double v : pulse) pe += v * v;
  double a = 0.0;
  for (double v : amplitudes) a += v * v;
  return pe * a;
}

namespace {

void append_field(PulseTrain& t, const HrpPacketSpec& spec, Field field, double gain,
                  std::int64_t slot_base, const std::vector<std::uint8_t>* sts_bits, double fs) {
  if (gain == 0.0) return;
  auto push = [&](std::int64_t slot, double a) {
    t.offsets.push_back(slot_sample(slot_base + slot, fs));
    t.amplitudes.push_back(a * gain);
  };
  const auto n = static_cast<std::int64_t>(spec.preamble_code.size());
  switch (field) {
    case Field::preamble:
      for (int r = 0; r < spec.preamble_repetitions; ++r)
        for (std::int64_t i = 0; i < n; ++i)
          if (spec.preamble_code[i] != 0) push(r * n + i, spec.preamble_code[i]);
      break;
    case Field::sfd:
      for (std::size_t s = 0; s < spec.sfd.size(); ++s) {
        if (spec.sfd[s] == 0) continue;
        for (std::int64_t i = 0; i < n; ++i)
          if (spec.preamble_code[i] != 0)
            push(static_cast<std::int64_t>(s) * n + i, spec.sfd[s] * spec.preamble_code[i]);
      }
      break;
    case Field::sts:
      for (std::size_t i = 0; i < sts_bits->size(); ++i)
        push(static_cast<std::int64_t>(i), (*sts_bits)[i] ? -1.0 : 1.0);
      break;
    case Field::data:
      for (std::size_t b = 0; b < spec.data_bits.size(); ++b)
        for (int k = 0; k < spec.pulses_per_data_bit; ++k)
          push(static_cast<std::int64_t>(b) * spec.pulses_per_data_bit + k, spec.data_bits[b] ? -1.0 : 1.0);
      break;
  }
}

PulseTrain empty_train(const PulseShape& shape, double fs) {
  PulseTrain t;
  t.pulse = pulse_samples(shape, fs);
  t.sample_rate_hz = fs;
  return t;
}

void finish_length(PulseTrain& t, std::int64_t slots, double fs) {
  std::int64_t len = slot_sample(slots, fs);
  if (!t.offsets.empty())
    len = std::max<std::int64_t>(len, t.offsets.back() + static_cast<std::int64_t>(t.pulse.size()));
  t.length = len;
}

}  // namespace

PulseTrain pulse_train(const HrpPacketSpec& spec, const PulseShape& shape, double fs) {
  spec.validate();
  PulseTrain t = empty_train(shape, fs);
  std::vector<std::uint8_t> bits;
  if (spec.sts) bits = generate_sts_bits(*spec.sts);
  const auto& a = spec.amplitudes;
  append_field(t, spec, Field::preamble, a.preamble, spec.slot_begin(Field::preamble), nullptr, fs);
  append_field(t, spec, Field::sfd, a.sfd, spec.slot_begin(Field::sfd), nullptr, fs);
  if (spec.sts) append_field(t, spec, Field::sts, a.sts, spec.slot_begin(Field::sts), &bits, fs);
  append_field(t, spec, Field::data, a.data, spec.slot_begin(Field::data), nullptr, fs);
  finish_length(t, spec.total_slots(), fs);
  return t;
}

PulseTrain field_train(const HrpPacketSpec& spec, Field field, const PulseShape& shape, double fs) {
  spec.validate();
  if (field == Field::sts && !spec.sts) throw ConfigError("packet has no STS field");
  if (field == Field::data && spec.data_bits.empty()) throw ConfigError("packet has no data field");
  PulseTrain t = empty_train(shape, fs);
  std::vector<std::uint8_t> bits;
  if (field == Field::sts) bits = generate_sts_bits(*spec.sts);
  append_field(t, spec, field, 1.0, 0, &bits, fs);
  finish_length(t, spec.slot_count(field), fs);
  return t;
}

PulseTrain symbol_train(const std::vector<std::int8_t>& code, const PulseShape& shape, double fs) {
  HrpPacketSpec s;
  s.preamble_code = code;
  s.preamble_repetitions = 1;
  return field_train(s, Field::preamble, shape, fs);
}

BasebandSignal modulate_packet(const HrpPacketSpec& spec, const PulseShape& shape, double fs) {
  return pulse_train(spec, shape, fs).render(0.0);
}

BasebandSignal local_template(const HrpPacketSpec& spec, Field field, const PulseShape& shape,
                              double fs) {
  return field_train(spec, field, shape, fs).render(0.0);
}

}  // namespace ghostpeak
