// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "ghostpeak/rng.hpp"

namespace ghostpeak {

AttackConfig ScenarioConfig::default_attack() {
  AttackConfig a;
  a.enabled = true;
  a.targets = {true, false};
  a.timing_jitter_sigma_ps = 1e6;
  a.preamble_gain = 0.25;
  a.sfd_gain = 0.25;
  a.sts_gain = 1.0;
  return a;
}

void ScenarioConfig::validate() const {
  if (!(true_distance_m > 0.0) || !std::isfinite(true_distance_m)) throw ConfigError("true_distance_m must be > 0");
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (baseline_trials < 10) throw ConfigError("baseline_trials must be >= 10");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(noise_sigma >= 0.0) || !(attacker_noise_sigma >= 0.0)) throw ConfigError("noise sigmas must be >= 0");
  if (!(nlos_excess_delay_ps >= 0.0) || !(nlos_relative_gain >= 0.0)) throw ConfigError("NLoS parameters must be >= 0");
  if (!(start_ps >= 0.0) || !(start_jitter_ps >= 0.0) || !(trial_interval_ps >= 0.0))
    throw ConfigError("start times must be >= 0");
  if (preamble_code_length < 2) throw ConfigError("preamble_code_length must be >= 2");
  if (!(attacker_distance_m > 0.0)) throw ConfigError("attacker_distance_m must be > 0");
  if (!(histogram_bin_m > 0.0)) throw ConfigError("histogram_bin_m must be > 0");
  if (rolling_window < 1) throw ConfigError("rolling_window must be >= 1");
  if (final_data_bits < 1) throw ConfigError("final_data_bits must be >= 1");
  DeviceClock{initiator_offset_ps, initiator_ppm, tick_ps}.validate();
  DeviceClock{responder_offset_ps, responder_ppm, tick_ps}.validate();
  StsConfig{.length_bits = sts_length_bits}.validate();
  pulse.validate();
  validate_sample_rate(sample_rate_hz);
  receiver.validate();
  attack.validate();
  if (!(reply1_ps > 0.0) || !(reply2_ps > 0.0) || !(reply3_ps > 0.0)) throw ConfigError("reply times must be > 0");
  if (preamble_repetitions < receiver.acquisition_symbols + 2)
    throw ConfigError("preamble_repetitions too small for acquisition_symbols");
  HrpPacketSpec probe;
  probe.preamble_code = {1};
  probe.sfd = sfd;
  probe.pulses_per_data_bit = pulses_per_data_bit;
  probe.validate();
}

namespace {

const std::vector<std::int8_t>& cached_code(std::uint64_t seed, int length) {
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, int>, std::vector<std::int8_t>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find({seed, length});
  if (it == cache.end()) it = cache.emplace(std::pair{seed, length}, make_preamble_code(seed, length)).first;
  return it->second;
}

double unit(SplitMix64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

ChannelModel link(double distance_m, double gain, double sigma, std::uint64_t seed) {
  ChannelModel c;
  c.taps = {Tap{ps_from_meters(distance_m), Complex{gain, 0.0}}};
  c.noise_sigma = sigma;
  c.seed = seed;
  return c;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master_seed, int trial) {
  return mix_seed({master_seed, static_cast<std::uint64_t>(trial)});
}

ExchangeConfig build_exchange(const ScenarioConfig& cfg, std::uint64_t seed, bool attack) {
  SplitMix64 g(mix_seed({seed, 0x5CE7A210ULL}));
  ExchangeConfig ex;
  ex.mode = cfg.mode;
  ex.initiator = {1, {cfg.initiator_offset_ps, cfg.initiator_ppm, cfg.tick_ps}};
  ex.responder = {2, {cfg.responder_offset_ps, cfg.responder_ppm, cfg.tick_ps}};

  const double d = cfg.true_distance_m;
  ChannelModel legit = link(d, 1.0 / d, cfg.noise_sigma, 0);
  if (cfg.nlos_relative_gain > 0.0) {
    const double phi = 2.0 * std::numbers::pi * unit(g);
    legit.taps.push_back({ps_from_meters(d) + cfg.nlos_excess_delay_ps, std::polar(cfg.nlos_relative_gain / d, phi)});
  }
  ex.initiator_to_responder = legit;
  ex.initiator_to_responder.seed = g();
  ex.responder_to_initiator = legit;
  ex.responder_to_initiator.seed = g();

  HrpPacketSpec p;
  p.preamble_code = cached_code(cfg.preamble_code_seed, cfg.preamble_code_length);
  p.preamble_repetitions = cfg.preamble_repetitions;
  p.sfd = cfg.sfd;
  p.pulses_per_data_bit = cfg.pulses_per_data_bit;
  StsConfig sts;
  SplitMix64 kg(cfg.sts_key_seed != 0 ? cfg.sts_key_seed : g());
  for (auto& b : sts.key) b = static_cast<std::uint8_t>(kg());
  for (auto& b : sts.upper96) b = static_cast<std::uint8_t>(kg());
  sts.counter = static_cast<std::uint32_t>(g());
  sts.length_bits = cfg.sts_length_bits;
  p.sts = sts;
  ex.packet = p;
  ex.shape = cfg.pulse;
  ex.sample_rate_hz = cfg.sample_rate_hz;
  ex.receiver = cfg.receiver;
  ex.reply1_ps = cfg.reply1_ps;
  ex.reply2_ps = cfg.reply2_ps;
  ex.reply3_ps = cfg.reply3_ps;
  ex.start_ps = cfg.start_ps + cfg.start_jitter_ps * unit(g);
  ex.final_data_message = cfg.final_data_message;
  if (cfg.final_data_message) {
    ex.final_data_bits.resize(static_cast<std::size_t>(cfg.final_data_bits));
    for (auto& b : ex.final_data_bits) b = static_cast<std::uint8_t>(g() & 1U);
  }

  if (attack && cfg.attack.enabled && cfg.attack.targets.any()) {
    AttackConfig a = cfg.attack;
    if (cfg.attack_auto_delay) {
      // Aim at the legitimate RMARKER arrival for the known geometry: the attacker near the
      // initiator hears packet 1 over its own short hop, the one near the responder over ~d.
      const double tof = ps_from_meters(d);
      const double tof_a = ps_from_meters(cfg.attacker_distance_m);
      a.delay_packet2_ps = cfg.reply1_ps + 2.0 * tof - 2.0 * tof_a;
      a.delay_packet3_ps = cfg.reply1_ps + cfg.reply2_ps + 2.0 * tof - tof_a;
    }
    a.sts_seed = mix_seed({cfg.attack.sts_seed, seed});
    // Gains are expressed against the legitimate amplitude seen by the victim.
    a.channel_to_initiator = link(cfg.attacker_distance_m, 1.0 / d, cfg.attacker_noise_sigma, g());
    a.channel_to_responder = link(cfg.attacker_distance_m, 1.0 / d, cfg.attacker_noise_sigma, g());
    ex.attack = a;
    ex.trigger_near_initiator = link(cfg.attacker_distance_m, 1.0 / cfg.attacker_distance_m, cfg.noise_sigma, g());
    ex.trigger_near_responder = link(d, 1.0 / d, cfg.noise_sigma, g());
    ex.attacker_receiver = cfg.receiver;
  }
  return ex;
}

double measured_distance(const ScenarioConfig& cfg, const RangingExchange& ex) {
  return cfg.distance_formula == DistanceFormula::full ? ex.distance_full : ex.distance_simple;
}

bool is_reduction(double measured_m, double true_distance_m, double baseline_max_neg_dev_m) {
  return measured_m < true_distance_m - 2.0 * baseline_max_neg_dev_m;
}

namespace {

template <class F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

BaselineResult run_baseline(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<std::optional<double>> errs(static_cast<std::size_t>(cfg.baseline_trials));
  parallel_for(cfg.baseline_trials, cfg.threads, [&](int i) {
    const auto seed = mix_seed({cfg.master_seed, 0xBA5E11E5ULL, static_cast<std::uint64_t>(i)});
    const auto ex = run_exchange(build_exchange(cfg, seed, false), seed);
    if (ex.status == ExchangeStatus::ok) errs[static_cast<std::size_t>(i)] = measured_distance(cfg, ex) - cfg.true_distance_m;
  });
  BaselineResult r;
  for (const auto& e : errs) {
    if (!e) {
      ++r.failed_trials;
      continue;
    }
    r.errors_m.push_back(*e);
    r.max_negative_deviation_m = std::max(r.max_negative_deviation_m, -*e);
  }
  return r;
}

bool benign_envelope_ok(const ScenarioConfig& cfg, int trials) {
  std::vector<int> bad(static_cast<std::size_t>(trials), 0);
  std::vector<int> far(static_cast<std::size_t>(trials), 0);
  parallel_for(trials, cfg.threads, [&](int i) {
    const auto seed = mix_seed({cfg.master_seed, 0xCA11B8A7EULL, static_cast<std::uint64_t>(i)});
    const auto ex = run_exchange(build_exchange(cfg, seed, false), seed);
    bool le = false;
    for (const auto& p : ex.packets) le = le || (p.toa && p.toa->leading_edge_used);
    bad[static_cast<std::size_t>(i)] = ex.status != ExchangeStatus::ok || le;
    if (ex.status == ExchangeStatus::ok)
      far[static_cast<std::size_t>(i)] = std::abs(measured_distance(cfg, ex) - cfg.true_distance_m) > 0.20;
  });
  int n_bad = 0, n_far = 0;
  for (std::size_t i = 0; i < bad.size(); ++i) {
    n_bad += bad[i];
    n_far += far[i];
  }
  return n_bad == 0 && n_far <= trials / 100;
}

CalibrationResult calibrate_noise(const ScenarioConfig& cfg, int trials, double margin_db) {
  if (trials < 10) throw ConfigError("calibration needs at least 10 trials per step");
  ScenarioConfig c = cfg;
  double lo = 1e-4, hi = 10.0;
  c.noise_sigma = lo;
  if (!benign_envelope_ok(c, trials)) throw ConfigError("benign envelope fails even at negligible noise");
  for (int it = 0; it < 14; ++it) {
    const double mid = std::sqrt(lo * hi);
    c.noise_sigma = mid;
    (benign_envelope_ok(c, trials) ? lo : hi) = mid;
  }
  CalibrationResult r;
  r.max_ok_sigma = lo;
  r.margin_db = margin_db;
  r.recommended_sigma = lo * std::pow(10.0, -margin_db / 20.0);
  r.trials_per_step = trials;
  return r;
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::vector<double> CampaignResult::successful_reductions() const {
  std::vector<double> v;
  for (const auto& m : measurements)
    if (m.is_reduction) v.push_back(m.reduction_m);
  return v;
}

CampaignResult run_campaign(const ScenarioConfig& cfg, std::vector<TraceRecord>* trace) {
  cfg.validate();
  CampaignResult res;
  res.baseline = run_baseline(cfg);
  res.baseline_max_neg_dev = res.baseline.max_negative_deviation_m;

  const auto n = static_cast<std::size_t>(cfg.n_trials);
  res.measurements.resize(n);
  std::vector<std::vector<TraceRecord>> per_trial(trace ? n : 0);
  parallel_for(cfg.n_trials, cfg.threads, [&](int i) {
    TrialOutcome o;
    o.trial = i;
    o.seed = trial_seed(cfg.master_seed, i);
    const auto ex = run_exchange(build_exchange(cfg, o.seed, true), o.seed);
    o.status = ex.status;
    if (ex.status == ExchangeStatus::ok) {
      o.distance_m = measured_distance(cfg, ex);
      o.reduction_m = cfg.true_distance_m - o.distance_m;
      o.is_reduction = is_reduction(o.distance_m, cfg.true_distance_m, res.baseline_max_neg_dev);
    }
    o.advance2_ps = ex.advance_ps(2);
    o.advance3_ps = ex.advance_ps(3);
    if (const auto* p = ex.packet(2); p && p->toa) o.leading_edge2 = p->toa->leading_edge_used;
    if (const auto* p = ex.packet(3); p && p->toa) o.leading_edge3 = p->toa->leading_edge_used;
    res.measurements[static_cast<std::size_t>(i)] = o;
    if (trace) per_trial[static_cast<std::size_t>(i)] = exchange_records(cfg, ex, i, res.baseline_max_neg_dev);
  });

  std::size_t successes = 0, lost = 0;
  res.reduction_histogram.bin_width = cfg.histogram_bin_m;
  for (const auto& m : res.measurements) {
    if (m.status != ExchangeStatus::ok) ++lost;
    if (!m.is_reduction) continue;
    ++successes;
    res.max_reduction = std::max(res.max_reduction, m.reduction_m);
    const auto bin = static_cast<std::size_t>(std::max(0.0, std::floor(m.reduction_m / cfg.histogram_bin_m)));
    if (res.reduction_histogram.counts.size() <= bin) res.reduction_histogram.counts.resize(bin + 1, 0);
    ++res.reduction_histogram.counts[bin];
  }
  res.success_rate = static_cast<double>(successes) / static_cast<double>(n);
  res.loss_rate = static_cast<double>(lost) / static_cast<double>(n);

  const auto w = static_cast<std::size_t>(cfg.rolling_window);
  if (n < w) {
    res.rolling_rate.push_back(res.success_rate);
  } else {
    std::size_t in_window = 0;
    for (std::size_t i = 0; i < n; ++i) {
      in_window += res.measurements[i].is_reduction ? 1 : 0;
      if (i >= w) in_window -= res.measurements[i - w].is_reduction ? 1 : 0;
      if (i + 1 >= w) res.rolling_rate.push_back(static_cast<double>(in_window) / static_cast<double>(w));
    }
  }

  if (trace)
    for (auto& v : per_trial) trace->insert(trace->end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return res;
}

void write_csv(const ScenarioConfig& cfg, const CampaignResult& result, std::ostream& os) {
  const std::string targets = cfg.attack.enabled ? to_string(cfg.attack.targets) : std::string("none");
  os << "trial,status,distance_m,reduction_m,is_reduction,targets,seed\n";
  for (const auto& m : result.measurements) {
    if (m.status == ExchangeStatus::ok)
      os << fmt::format("{},{},{:.6f},{:.6f},{},{},{}\n", m.trial, to_string(m.status), m.distance_m, m.reduction_m,
                        m.is_reduction ? 1 : 0, targets, m.seed);
    else
      os << fmt::format("{},{},,,0,{},{}\n", m.trial, to_string(m.status), targets, m.seed);
  }
}

std::vector<TraceRecord> exchange_records(const ScenarioConfig& cfg, const RangingExchange& ex, int trial,
                                          double baseline_max_neg_dev) {
  struct Pending {
    double t_ps;
    int seq;
    TraceRecord rec;
  };
  std::vector<Pending> pend;
  const double offset = static_cast<double>(trial) * cfg.trial_interval_ps;
  const auto exch = static_cast<std::uint32_t>(trial);
  int seq = 0;
  double last = 0.0;
  auto add = [&](double t, RecordType type, std::uint16_t dev, TracePayload p) {
    pend.push_back({t, seq++, TraceRecord{type, 0, dev, std::move(p)}});
    last = std::max(last, t);
  };

  for (const auto& e : ex.emissions) {
    TxFields f;
    f.exchange = exch;
    f.packet_index = static_cast<std::uint8_t>(e.packet_index);
    f.attacker = e.attacker ? 1 : 0;
    f.spec_digest = e.digest;
    f.gains = {e.gains.preamble, e.gains.sfd, e.gains.sts, e.gains.data};
    f.lead_ps = static_cast<std::uint64_t>(std::llround(e.rmarker_ps - e.start_ps));
    f.duration_ps = static_cast<std::uint64_t>(std::llround(e.end_ps - e.start_ps));
    add(e.rmarker_ps, RecordType::tx, e.source_id, f);
  }
  for (const auto& t : ex.triggers) add(t.toa_ps, RecordType::rx, t.attacker_id, RxFields{exch, 1, 1});
  for (const auto& p : ex.packets) {
    const double t = p.toa ? p.toa->toa_ps : p.arrival_ps;
    if (p.status == ReceptionStatus::ok)
      add(t, RecordType::rx, p.rx_id, RxFields{exch, static_cast<std::uint8_t>(p.index), p.tx_id});
    ToaFields f;
    f.exchange = exch;
    f.packet_index = static_cast<std::uint8_t>(p.index);
    f.status = static_cast<std::uint8_t>(p.status);
    if (p.toa) {
      f.peak_index = p.toa->peak_index;
      f.accepted_index = p.toa->accepted_index;
      f.peak_magnitude = p.toa->peak_magnitude;
      f.noise_floor = p.toa->noise_floor;
      f.sts_quality = p.toa->sts_quality;
      f.leading_edge_used = p.toa->leading_edge_used ? 1 : 0;
    }
    add(t, RecordType::toa_decision, p.rx_id, f);
  }
  SummaryFields s;
  s.exchange = exch;
  s.status = static_cast<std::uint8_t>(ex.status);
  const bool armed = std::any_of(ex.emissions.begin(), ex.emissions.end(), [](const auto& e) { return e.attacker; }) ||
                     !ex.triggers.empty();
  if (armed) s.targets = static_cast<std::uint8_t>((cfg.attack.targets.packet2 ? 1 : 0) | (cfg.attack.targets.packet3 ? 2 : 0));
  s.distance_full_m = ex.distance_full;
  s.distance_simple_m = ex.distance_simple;
  s.true_distance_m = cfg.true_distance_m;
  if (ex.status == ExchangeStatus::ok) {
    s.measured_m = measured_distance(cfg, ex);
    s.is_reduction = is_reduction(s.measured_m, cfg.true_distance_m, baseline_max_neg_dev) ? 1 : 0;
  }
  add(last, RecordType::exchange_summary, ex.packets.empty() ? 1 : ex.packets.front().tx_id, s);

  std::stable_sort(pend.begin(), pend.end(), [](const Pending& a, const Pending& b) {
    return a.t_ps != b.t_ps ? a.t_ps < b.t_ps : a.seq < b.seq;
  });
  std::vector<TraceRecord> out;
  out.reserve(pend.size());
  std::int64_t prev = -1;
  for (auto& p : pend) {
    auto k = static_cast<std::int64_t>(std::floor((offset + p.t_ps) / cfg.tick_ps));
    if (k <= prev) k = prev + 1;
    prev = k;
    p.rec.timestamp_ps = static_cast<std::uint64_t>(std::llround(static_cast<double>(k) * cfg.tick_ps));
    out.push_back(std::move(p.rec));
  }
  return out;
}

}  // namespace ghostpeak
