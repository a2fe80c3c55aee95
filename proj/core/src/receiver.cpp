// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/receiver.hpp"

#include <algorithm>
#include <cmath>

namespace ghostpeak {

void ReceiverConfig::validate() const {
  if (backsearch_window < 0) throw ConfigError("backsearch_window must be >= 0");
  for (double v : {detect_threshold_db, leading_edge_threshold_db, leading_edge_rel_max_db, min_sts_quality})
    if (!std::isfinite(v)) throw ConfigError("receiver thresholds must be finite");
  if (min_sts_quality < 0.0 || min_sts_quality > 1.0) throw ConfigError("min_sts_quality must be in [0,1]");
  if (sts_bit_check && sts_bit_check->max_bit_errors < 0) throw ConfigError("max_bit_errors must be >= 0");
  if (acquisition_symbols < 1) throw ConfigError("acquisition_symbols must be >= 1");
  if (acquisition_lags < 64) throw ConfigError("acquisition_lags must be >= 64");
  if (sts_search_half_width < 32) throw ConfigError("sts_search_half_width must be >= 32");
}

const char* to_string(ReceptionStatus s) {
  switch (s) {
    case ReceptionStatus::ok: return "ok";
    case ReceptionStatus::no_preamble: return "no-preamble";
    case ReceptionStatus::no_sts_peak: return "no-sts-peak";
    case ReceptionStatus::low_quality: return "low-quality";
    case ReceptionStatus::bit_check_failed: return "bit-check-failed";
    case ReceptionStatus::data_error: return "data-error";
  }
  return "?";
}

Cir compute_cir(const BasebandSignal& received, const BasebandSignal& tmpl) {
  if (tmpl.samples.empty()) throw ConfigError("empty template");
  if (tmpl.samples.size() > received.samples.size()) throw ConfigError("template longer than signal");
  std::vector<std::size_t> support;
  for (std::size_t m = 0; m < tmpl.samples.size(); ++m)
    if (tmpl.samples[m] != Complex{}) support.push_back(m);
  const std::size_t lags = received.samples.size() - tmpl.samples.size() + 1;
  Cir cir;
  cir.lag0_time_ps = received.t0_ps;
  cir.sample_rate_hz = received.sample_rate_hz;
  cir.values.assign(lags, Complex{});
  for (std::size_t t = 0; t < lags; ++t) {
    Complex acc{};
    for (std::size_t m : support) acc += std::conj(tmpl.samples[m]) * received.samples[m + t];
    cir.values[t] = acc;
  }
  return cir;
}

Cir compute_cir(const BasebandSignal& received, const PulseTrain& tmpl, int lag_begin, int lag_end) {
  if (lag_begin < 0 || lag_end <= lag_begin) throw ConfigError("bad lag range");
  const auto n = static_cast<std::int64_t>(received.samples.size());
  if (lag_end - 1 + tmpl.length > n) throw ConfigError("template longer than signal");
  const auto plen = static_cast<std::int64_t>(tmpl.pulse.size());
  const std::int64_t span = lag_end - lag_begin;
  const std::int64_t ylen = (tmpl.offsets.empty() ? 0 : tmpl.offsets.back()) + span;
  // Pulse-matched filter output over the samples the lags can touch.
  std::vector<Complex> y(static_cast<std::size_t>(ylen));
  const Complex* r = received.samples.data() + lag_begin;
  for (std::int64_t i = 0; i < ylen; ++i) {
    Complex acc{};
    for (std::int64_t j = 0; j < plen; ++j) acc += tmpl.pulse[static_cast<std::size_t>(j)] * r[i + j];
    y[static_cast<std::size_t>(i)] = acc;
  }
  Cir cir;
  cir.lag0_time_ps = received.t0_ps + lag_begin * 1e12 / received.sample_rate_hz;
  cir.sample_rate_hz = received.sample_rate_hz;
  cir.values.assign(static_cast<std::size_t>(span), Complex{});
  Complex* out = cir.values.data();
  for (std::size_t k = 0; k < tmpl.offsets.size(); ++k) {
    const double a = tmpl.amplitudes[k];
    const Complex* yk = y.data() + tmpl.offsets[k];
    for (std::int64_t l = 0; l < span; ++l) out[l] += a * yk[l];
  }
  return cir;
}

namespace {

std::size_t argmax_abs(const std::vector<Complex>& v) {
  std::size_t p = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::norm(v[i]);
    if (m > best) {
      best = m;
      p = i;
    }
  }
  return p;
}

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace

double estimate_noise_floor(const Cir& cir, const ReceiverConfig& cfg) {
  if (cir.values.size() < 64) throw ConfigError("CIR too short for a noise estimate (need 64 lags)");
  const auto p = static_cast<std::int64_t>(argmax_abs(cir.values));
  const std::int64_t guard = 2LL * cfg.backsearch_window;
  std::vector<double> mags;
  mags.reserve(cir.values.size());
  for (std::size_t i = 0; i < cir.values.size(); ++i)
    if (std::abs(static_cast<std::int64_t>(i) - p) > guard) mags.push_back(std::abs(cir.values[i]));
  if (mags.empty())
    for (const auto& v : cir.values) mags.push_back(std::abs(v));

  if (cfg.noise_estimator == NoiseEstimator::median_abs) {
    const std::size_t mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
    if (mags.size() % 2 == 1) return mags[mid];
    const double hi = mags[mid];
    const double lo = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
  }
  // Interquartile mean.
  std::sort(mags.begin(), mags.end());
  const std::size_t lo = mags.size() / 4;
  const std::size_t hi = mags.size() - mags.size() / 4;
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += mags[i];
  return s / static_cast<double>(hi - lo);
}

std::optional<ToaEstimate> detect_toa(const Cir& cir, const ReceiverConfig& cfg) {
  if (cir.values.empty()) return std::nullopt;
  const std::size_t p = argmax_abs(cir.values);
  const double peak = std::abs(cir.values[p]);
  if (!(peak > 0.0)) return std::nullopt;
  const double floor = estimate_noise_floor(cir, cfg);
  if (peak < floor * db_to_amp(cfg.detect_threshold_db)) return std::nullopt;

  const double abs_cut = floor * db_to_amp(cfg.leading_edge_threshold_db);
  const double rel_cut = peak * db_to_amp(-cfg.leading_edge_rel_max_db);
  std::size_t accepted = p;
  const std::size_t first = p >= static_cast<std::size_t>(cfg.backsearch_window) ? p - cfg.backsearch_window : 0;
  for (std::size_t q = first; q < p; ++q) {
    const double m = std::abs(cir.values[q]);
    if (!(m > abs_cut && m > rel_cut)) continue;
    if (cfg.require_local_max) {
      const double left = q > 0 ? std::abs(cir.values[q - 1]) : 0.0;
      const double right = std::abs(cir.values[q + 1]);
      if (!(m >= left && m > right)) continue;
    }
    accepted = q;
    break;
  }
  ToaEstimate est;
  est.peak_index = static_cast<int>(p);
  est.accepted_index = static_cast<int>(accepted);
  est.toa_ps = cir.lag_time_ps(static_cast<double>(accepted));
  est.peak_magnitude = peak;
  est.noise_floor = floor;
  est.leading_edge_used = accepted != p;
  return est;
}

namespace {

// One contiguous pulse of the template: its sample range and the matched output y.
struct Segment {
  std::int64_t begin;
  std::int64_t end;
  Complex y;
};

double quality_from_segments(const std::vector<Segment>& segs, double e_template, double e_received,
                             const ReceiverConfig& cfg, int* errors_out) {
  Complex ref{};
  for (const auto& s : segs) ref += s.y;
  int errors = 0;
  for (const auto& s : segs)
    if (!(std::real(s.y * std::conj(ref)) > 0.0)) ++errors;
  if (errors_out) *errors_out = errors;
  if (cfg.sts_bit_check && errors > cfg.sts_bit_check->max_bit_errors) return 0.0;
  if (!(e_template > 0.0) || !(e_received > 0.0)) return 0.0;
  return std::clamp(std::abs(ref) / std::sqrt(e_template * e_received), 0.0, 1.0);
}

std::vector<Segment> train_segments(const BasebandSignal& rx, const PulseTrain& tmpl, int lag,
                                    double* e_t, double* e_r) {
  const auto n = static_cast<std::int64_t>(rx.samples.size());
  const auto plen = static_cast<std::int64_t>(tmpl.pulse.size());
  std::vector<Segment> segs;
  segs.reserve(tmpl.size());
  *e_t = 0.0;
  *e_r = 0.0;
  for (std::size_t k = 0; k < tmpl.size(); ++k) {
    Segment s{tmpl.offsets[k] + lag, tmpl.offsets[k] + lag + plen, {}};
    for (std::int64_t j = 0; j < plen; ++j) {
      const std::int64_t idx = s.begin + j;
      const double g = tmpl.amplitudes[k] * tmpl.pulse[static_cast<std::size_t>(j)];
      *e_t += g * g;
      if (idx < 0 || idx >= n) continue;
      const Complex r = rx.samples[static_cast<std::size_t>(idx)];
      s.y += g * r;
      *e_r += std::norm(r);
    }
    segs.push_back(s);
  }
  return segs;
}

}  // namespace

double sts_quality(const BasebandSignal& received, const BasebandSignal& tmpl, const ToaEstimate& toa,
                   const ReceiverConfig& cfg) {
  const int lag = toa.accepted_index;
  const auto n = static_cast<std::int64_t>(received.samples.size());
  std::vector<Segment> segs;
  double e_t = 0.0, e_r = 0.0;
  const auto m = static_cast<std::int64_t>(tmpl.samples.size());
  for (std::int64_t i = 0; i < m;) {
    if (tmpl.samples[static_cast<std::size_t>(i)] == Complex{}) {
      ++i;
      continue;
    }
    Segment s{i + lag, 0, {}};
    for (; i < m && tmpl.samples[static_cast<std::size_t>(i)] != Complex{}; ++i) {
      const Complex g = tmpl.samples[static_cast<std::size_t>(i)];
      e_t += std::norm(g);
      const std::int64_t idx = i + lag;
      if (idx < 0 || idx >= n) continue;
      const Complex r = received.samples[static_cast<std::size_t>(idx)];
      s.y += std::conj(g) * r;
      e_r += std::norm(r);
    }
    s.end = i + lag;
    segs.push_back(s);
  }
  return quality_from_segments(segs, e_t, e_r, cfg, nullptr);
}

double sts_quality(const BasebandSignal& received, const PulseTrain& tmpl, int lag, const ReceiverConfig& cfg) {
  double e_t = 0.0, e_r = 0.0;
  const auto segs = train_segments(received, tmpl, lag, &e_t, &e_r);
  return quality_from_segments(segs, e_t, e_r, cfg, nullptr);
}

int sts_bit_errors(const BasebandSignal& received, const PulseTrain& tmpl, int lag) {
  double e_t = 0.0, e_r = 0.0;
  const auto segs = train_segments(received, tmpl, lag, &e_t, &e_r);
  int errors = 0;
  quality_from_segments(segs, e_t, e_r, ReceiverConfig{}, &errors);
  return errors;
}

namespace {

// Sign decision per data bit against the phase of the timing peak.
bool data_ok(std::span<const MediumEvent> medium, const ReceptionPlan& plan, std::int64_t first, Complex ref) {
  const HrpPacketSpec& spec = *plan.spec;
  if (spec.data_bits.empty()) return true;
  const PulseTrain data = field_train(spec, Field::data, plan.shape, plan.sample_rate_hz);
  const BasebandSignal rx = mix_samples(medium, first, data.length, plan.sample_rate_hz);
  const auto per_bit = static_cast<std::size_t>(spec.pulses_per_data_bit);
  const auto plen = data.pulse.size();
  for (std::size_t b = 0; b < spec.data_bits.size(); ++b) {
    Complex y{};
    for (std::size_t k = b * per_bit; k < (b + 1) * per_bit; ++k)
      for (std::size_t j = 0; j < plen; ++j)
        y += data.amplitudes[k] * data.pulse[j] * rx.samples[static_cast<std::size_t>(data.offsets[k]) + j];
    if (!(std::real(y * std::conj(ref)) > 0.0)) return false;
  }
  return true;
}

}  // namespace

Reception receive_packet(std::span<const MediumEvent> medium, const ReceptionPlan& plan,
                         const ReceiverConfig& cfg) {
  if (!plan.spec) throw ConfigError("reception plan without packet spec");
  cfg.validate();
  const HrpPacketSpec& spec = *plan.spec;
  const double fs = plan.sample_rate_hz;
  const double ts_ps = 1e12 / fs;
  Reception out;

  // Preamble acquisition: fold a few symbols and correlate cyclically with one symbol.
  const PulseTrain sym = symbol_train(spec.preamble_code, plan.shape, fs);
  const std::int64_t lsym = slot_sample(static_cast<std::int64_t>(spec.preamble_code.size()), fs);
  const std::int64_t n_listen = std::llround(plan.listen_ps / ts_ps);
  const BasebandSignal raw = mix_samples(medium, n_listen + lsym, cfg.acquisition_symbols * lsym, fs);
  const std::int64_t ext_len = cfg.acquisition_lags + sym.length;
  BasebandSignal folded;
  folded.sample_rate_hz = fs;
  folded.t0_ps = static_cast<double>(n_listen) * ts_ps;
  folded.samples.assign(static_cast<std::size_t>(ext_len), Complex{});
  for (std::int64_t s = 0; s < cfg.acquisition_symbols; ++s)
    for (std::int64_t i = 0; i < lsym; ++i) folded.samples[static_cast<std::size_t>(i)] += raw.samples[static_cast<std::size_t>(s * lsym + i)];
  for (std::int64_t i = lsym; i < ext_len; ++i) folded.samples[static_cast<std::size_t>(i)] = folded.samples[static_cast<std::size_t>(i % lsym)];

  const Cir acq = compute_cir(folded, sym, 0, cfg.acquisition_lags);
  const auto pre = detect_toa(acq, cfg);
  if (!pre) {
    out.status = ReceptionStatus::no_preamble;
    return out;
  }
  out.preamble_start_ps = acq.lag_time_ps(pre->peak_index);
  const std::int64_t rmarker_off = slot_sample(spec.rmarker_slot(), fs);

  if (!plan.use_sts || !spec.sts) {
    ToaEstimate t = *pre;
    t.toa_ps += static_cast<double>(rmarker_off) * ts_ps;
    out.toa = t;
    out.status = data_ok(medium, plan, n_listen + pre->peak_index + slot_sample(spec.slot_begin(Field::data), fs),
                         acq.values[static_cast<std::size_t>(pre->peak_index)])
                     ? ReceptionStatus::ok
                     : ReceptionStatus::data_error;
    return out;
  }

  const PulseTrain sts = field_train(spec, Field::sts, plan.shape, fs);
  const int half = cfg.sts_search_half_width;
  const std::int64_t first = n_listen + pre->peak_index + rmarker_off - half;
  const BasebandSignal rx = mix_samples(medium, first, 2LL * half + sts.length, fs);
  const Cir cir = compute_cir(rx, sts, 0, 2 * half + 1);
  auto toa = detect_toa(cir, cfg);
  if (!toa) {
    out.status = ReceptionStatus::no_sts_peak;
    return out;
  }
  ReceiverConfig plain = cfg;
  plain.sts_bit_check.reset();
  out.main_peak_quality = sts_quality(rx, sts, toa->peak_index, plain);
  toa->sts_quality = sts_quality(rx, sts, toa->accepted_index, plain);
  out.toa = toa;
  if (out.main_peak_quality < cfg.min_sts_quality) {
    out.status = ReceptionStatus::low_quality;
    return out;
  }
  if (cfg.sts_bit_check && sts_bit_errors(rx, sts, toa->accepted_index) > cfg.sts_bit_check->max_bit_errors) {
    out.toa->sts_quality = 0.0;
    out.status = ReceptionStatus::bit_check_failed;
    return out;
  }

  if (!data_ok(medium, plan, first + toa->peak_index + slot_sample(spec.slot_begin(Field::data), fs) - rmarker_off,
               cir.values[static_cast<std::size_t>(toa->peak_index)])) {
    out.status = ReceptionStatus::data_error;
    return out;
  }
  out.status = ReceptionStatus::ok;
  return out;
}

}  // namespace ghostpeak
