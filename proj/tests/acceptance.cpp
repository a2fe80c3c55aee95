// SPDX-License-Identifier: Apache-2.0
// Acceptance harness: one PASS/FAIL line per criterion. Exit code is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "ghostpeak/campaign.hpp"
#include "ghostpeak/phy.hpp"
#include "ghostpeak/stats.hpp"
#include "ghostpeak/trace.hpp"
#include "sts_oracle.hpp"

using namespace ghostpeak;

namespace {

constexpr double kTs = 1e12 / kDefaultSampleRateHz;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Verdict()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  fmt::print("{} C{:<2} {:<28} {} ({:.1f} s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail, secs);
  std::fflush(stdout);
}

// Sample-grid geometry: arrivals land on samples and ticks, so benign ranging is exact.
ScenarioConfig grid_scenario() {
  ScenarioConfig c;
  c.tick_ps = kTs / 32.0;
  c.true_distance_m = meters_from_ps(102 * kTs);
  c.start_jitter_ps = 0.0;
  c.baseline_trials = 20;
  return c;
}

double packet2_bound(const ScenarioConfig& c) {
  return meters_from_ps(c.receiver.backsearch_window * kTs) / 2.0 + meters_from_ps(2.0 * c.tick_ps);
}

// Benign distance minus attacked distance for the same trial seed.
double matched_reduction(const ScenarioConfig& c, const TrialOutcome& m) {
  auto ex = run_exchange(build_exchange(c, m.seed, false), m.seed);
  if (ex.status != ExchangeStatus::ok) return std::nan("");
  return measured_distance(c, ex) - m.distance_m;
}

Verdict c1_formulas() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<long long> tof(0, 1'000'000), reply(1'000'000, 2'000'000'000);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double t = static_cast<double>(tof(rng));
    const double a = static_cast<double>(reply(rng)), b = static_cast<double>(reply(rng));
    const double full = ds_twr_distance_full(2 * t + a, a, 2 * t + b, b);
    const double simple = ds_twr_distance_simple(2 * t + a, a, 2 * t + b, b);
    worst = std::max(worst, std::abs(full - simple));
  }
  const double expect = meters_from_ps(10'000.0);
  const double f = ds_twr_distance_full(1'020'000, 1'000'000, 1'020'000, 1'000'000);
  const double s = ds_twr_distance_simple(1'020'000, 1'000'000, 1'020'000, 1'000'000);
  const bool ok = worst <= 1e-12 && std::abs(f - expect) <= 1e-12 && std::abs(s - expect) <= 1e-12;
  return {ok, fmt::format("max|full-simple|={:.2e} m symmetric full={:.6f} simple={:.6f} m", worst, f, s)};
}

Verdict c2_factor_two() {
  // Timestamp level: the same realized advance applied to packet 2 or packet 3 of recorded
  // exchanges (simple formula, tick-aligned grid).
  auto g = grid_scenario();
  g.distance_formula = DistanceFormula::simple;
  g.attack.sts_gain = 5.0;
  g.n_trials = 400;
  g.attack.targets = parse_targets("packet2");
  auto r2 = run_campaign(g);
  double worst_exact = 0.0;
  int exact_checked = 0;
  for (const auto& m : r2.measurements) {
    if (!m.is_reduction) continue;
    auto benign = run_exchange(build_exchange(g, m.seed, false), m.seed);
    const double d = m.advance2_ps;
    const double base = ds_twr_distance_simple(benign.t_round1, benign.t_reply1, benign.t_round2, benign.t_reply2);
    const double red2 = base - m.distance_m;
    const double red3 = base - ds_twr_distance_simple(benign.t_round1, benign.t_reply1, benign.t_round2 - d, benign.t_reply2);
    worst_exact = std::max(worst_exact, std::abs(red2 - 2.0 * red3));
    ++exact_checked;
  }

  // Monte Carlo: packet2-only and packet3-only campaigns, matched reductions grouped by advance.
  ScenarioConfig c;
  c.attack.sts_gain = 5.0;
  c.n_trials = 5000;
  std::map<long, std::vector<double>> by2, by3;
  for (const char* target : {"packet2", "packet3"}) {
    auto cfg = c;
    cfg.attack.targets = parse_targets(target);
    const bool p2 = cfg.attack.targets.packet2;
    auto r = run_campaign(cfg);
    for (const auto& m : r.measurements) {
      if (!m.is_reduction) continue;
      const double red = matched_reduction(cfg, m);
      if (std::isnan(red)) continue;
      const long k = std::lround((p2 ? m.advance2_ps : m.advance3_ps) / kTs);
      (p2 ? by2 : by3)[k].push_back(red);
    }
  }
  double num = 0.0, den = 0.0;
  std::size_t n2 = 0, n3 = 0;
  for (auto& [k, v2] : by2) {
    n2 += v2.size();
    auto it = by3.find(k);
    if (it == by3.end() || k <= 0) continue;
    const auto& v3 = it->second;
    const double w = static_cast<double>(std::min(v2.size(), v3.size()));
    num += w * std::accumulate(v2.begin(), v2.end(), 0.0) / static_cast<double>(v2.size());
    den += w * std::accumulate(v3.begin(), v3.end(), 0.0) / static_cast<double>(v3.size());
  }
  for (auto& [k, v] : by3) n3 += v.size();
  const double ratio = den > 0 ? num / den : 0.0;
  const bool ok = exact_checked > 0 && worst_exact <= 1e-9 && n2 >= 1000 && n3 >= 1000 &&
                  std::abs(ratio - 2.0) <= 0.1;
  return {ok, fmt::format("exact: {} trials max|r2-2r3|={:.1e} m; MC ratio={:.4f} (successes p2={} p3={})",
                          exact_checked, worst_exact, ratio, n2, n3)};
}

Verdict c3_backsearch_bound() {
  auto c = grid_scenario();
  c.attack.sts_gain = 5.0;
  c.attack.targets = parse_targets("packet2");
  c.n_trials = 100000;
  auto r = run_campaign(c);
  const double bound = packet2_bound(c);
  long over = 0, succ = 0;
  for (const auto& m : r.measurements) {
    if (!m.is_reduction) continue;
    ++succ;
    if (m.reduction_m > bound) ++over;
  }
  return {over == 0 && succ > 0,
          fmt::format("{} successes, {} above {:.4f} m, max={:.4f} m", succ, over, bound, r.max_reduction)};
}

Verdict c4_benign_envelope() {
  std::string detail;
  bool ok = true;
  for (double d : {5.0, 10.0, 15.0}) {
    ScenarioConfig c;
    c.true_distance_m = d;
    c.baseline_trials = 1000;
    c.master_seed = 4000 + static_cast<std::uint64_t>(d);
    auto b = run_baseline(c);
    const auto within = std::count_if(b.errors_m.begin(), b.errors_m.end(), [](double e) { return std::abs(e) <= 0.20; });
    const double frac = static_cast<double>(within) / 1000.0;
    ok = ok && frac >= 0.99;
    detail += fmt::format("{}m:{:.3f} ", d, frac);
  }
  return {ok, detail + "(fraction |err|<=0.20 m)"};
}

Verdict c5_effectiveness() {
  ScenarioConfig c;  // tuned default
  c.n_trials = 20000;
  auto r = run_campaign(c);
  const double bound = packet2_bound(c) + r.baseline_max_neg_dev;
  const bool band = r.success_rate >= 0.005 && r.success_rate <= 0.20;
  const bool support = r.max_reduction > 0.0 && r.max_reduction <= bound;

  // Support at 5 m vs 15 m: matched reductions in quarter-sample units, independent seeds.
  auto support_sample = [](double dist, std::uint64_t seed) {
    ScenarioConfig k;
    k.attack.sts_gain = 5.0;
    k.true_distance_m = dist;
    k.master_seed = seed;
    k.n_trials = 32000;
    auto res = run_campaign(k);
    const double q = meters_from_ps(kTs) / 4.0;
    std::vector<double> out;
    for (const auto& m : res.measurements) {
      if (!m.is_reduction) continue;
      const double red = matched_reduction(k, m);
      if (!std::isnan(red)) out.push_back(std::round(red / q));
    }
    return out;
  };
  const auto a = support_sample(5.0, 1), b = support_sample(15.0, 2);
  const auto ks = ks_two_sample(a, b);
  const bool ok = band && support && ks.p_value > 0.01;
  return {ok, fmt::format("success={:.4f} max={:.3f} m (limit {:.3f}) KS D={:.4f} p={:.3g} n={}/{}",
                          r.success_rate, r.max_reduction, bound, ks.statistic, ks.p_value, a.size(), b.size())};
}

Verdict c6_jamming_knee() {
  const std::vector<double> gains{0.5, 1, 2, 3, 5, 8, 12, 16, 24, 32, 64};
  std::vector<double> loss, succ;
  for (double g : gains) {
    ScenarioConfig c;
    c.attack.sts_gain = g;
    c.n_trials = 1500;
    auto r = run_campaign(c);
    loss.push_back(r.loss_rate);
    succ.push_back(r.success_rate);
  }
  const double rho = spearman_rho(loss, gains);
  std::size_t knee = gains.size();
  for (std::size_t i = 0; i < gains.size(); ++i)
    if (loss[i] >= 0.5) {
      knee = i;
      break;
    }
  const auto peak = static_cast<std::size_t>(std::max_element(succ.begin(), succ.end()) - succ.begin());
  const bool ok = rho > 0.8 && knee < gains.size() && peak < knee && succ[peak] > 0.0;
  return {ok, fmt::format("rho(loss,gain)={:.3f} knee gain={} success peak gain={} ({:.3f})", rho,
                          knee < gains.size() ? gains[knee] : -1.0, gains[peak], succ[peak])};
}

Verdict c7_two_devices() {
  auto c = grid_scenario();
  c.attack.sts_gain = 5.0;
  c.attack.targets = parse_targets("both");
  c.n_trials = 10000;
  auto r = run_campaign(c);
  const auto red = r.successful_reductions();
  const double half = r.max_reduction / 2.0;
  const auto low = std::count_if(red.begin(), red.end(), [&](double x) { return x <= half; });
  const auto high = static_cast<long>(red.size()) - low;
  const double bound = packet2_bound(c);
  const bool ok = r.max_reduction > bound && low > high;
  return {ok, fmt::format("max={:.3f} m vs packet2 bound {:.3f} m, mass <=half={} >half={}", r.max_reduction, bound,
                          low, high)};
}

Verdict c8_timing_tolerance() {
  ScenarioConfig c;
  c.n_trials = 20000;
  c.attack.timing_jitter_sigma_ps = 1e6;
  const double s1 = run_campaign(c).success_rate;
  c.attack.timing_jitter_sigma_ps = 1e7;
  const double s10 = run_campaign(c).success_rate;
  const bool ok = s1 >= 5.0 * s10 && s1 > 0.0;
  return {ok, fmt::format("1us={:.4f} 10us={:.4f} ratio={:.2f}", s1, s10, s10 > 0 ? s1 / s10 : INFINITY)};
}

TraceRecord random_record(std::mt19937_64& rng) {
  auto u8 = [&] { return static_cast<std::uint8_t>(rng()); };
  auto dbl = [&] {
    std::uniform_real_distribution<double> u(-1e12, 1e12);
    return u(rng);
  };
  TraceRecord r;
  r.timestamp_ps = rng();
  r.device_id = static_cast<std::uint16_t>(rng());
  switch (rng() % 4) {
    case 0:
      r.type = RecordType::tx;
      r.payload = TxFields{static_cast<std::uint32_t>(rng()), u8(), u8(), rng(), {dbl(), dbl(), dbl(), dbl()}, rng(), rng()};
      break;
    case 1:
      r.type = RecordType::rx;
      r.payload = RxFields{static_cast<std::uint32_t>(rng()), u8(), static_cast<std::uint16_t>(rng())};
      break;
    case 2:
      r.type = RecordType::toa_decision;
      r.payload = ToaFields{static_cast<std::uint32_t>(rng()), u8(), u8(), static_cast<std::int32_t>(rng()),
                            static_cast<std::int32_t>(rng()), dbl(), dbl(), dbl(), u8()};
      break;
    default: {
      r.type = RecordType::exchange_summary;
      SummaryFields f{static_cast<std::uint32_t>(rng()), u8(), u8(), u8(), dbl(), dbl(), dbl(), dbl(), {}};
      f.note.assign(rng() % 32, 'n');
      r.payload = f;
    }
  }
  return r;
}

Verdict c9_determinism() {
  auto run = [](int threads, std::string& csv, std::vector<std::uint8_t>& trace) {
    ScenarioConfig c;
    c.attack.sts_gain = 3.0;
    c.n_trials = 400;
    c.threads = threads;
    std::vector<TraceRecord> recs;
    auto r = run_campaign(c, &recs);
    std::ostringstream os;
    write_csv(c, r, os);
    csv = os.str();
    trace = encode_trace(recs);
  };
  std::string csv1, csv4;
  std::vector<std::uint8_t> tr1, tr4;
  run(1, csv1, tr1);
  run(4, csv4, tr4);
  std::mt19937_64 rng(909);
  std::vector<TraceRecord> recs;
  for (int i = 0; i < 10000; ++i) recs.push_back(random_record(rng));
  const bool round_trip = decode_trace(encode_trace(recs)) == recs;
  const bool ok = csv1 == csv4 && tr1 == tr4 && round_trip && !tr1.empty();
  return {ok, fmt::format("csv {} ({} B) trace {} ({} B) round-trip {}", csv1 == csv4 ? "identical" : "differs",
                          csv1.size(), tr1 == tr4 ? "identical" : "differs", tr1.size(), round_trip ? "ok" : "broken")};
}

Verdict c10_sts_oracle() {
  std::mt19937_64 rng(1010);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    StsConfig s;
    for (auto& b : s.key) b = static_cast<std::uint8_t>(rng());
    for (auto& b : s.upper96) b = static_cast<std::uint8_t>(rng());
    s.counter = static_cast<std::uint32_t>(rng());
    s.length_bits = 128 * static_cast<int>(1 + rng() % 32);
    if (generate_sts_bits(s) != oracle::sts_bits(s.key, s.upper96, s.counter, s.length_bits)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} of 1000 configs differ from the OpenSSL reference", mismatches)};
}

}  // namespace

int main() {
  report(1, "formula suite", c1_formulas);
  report(2, "packet2 vs packet3 factor", c2_factor_two);
  report(3, "back-search bound", c3_backsearch_bound);
  report(4, "benign envelope", c4_benign_envelope);
  report(5, "attack effectiveness", c5_effectiveness);
  report(6, "jamming knee", c6_jamming_knee);
  report(7, "two-device superiority", c7_two_devices);
  report(8, "timing tolerance", c8_timing_tolerance);
  report(9, "trace/csv determinism", c9_determinism);
  report(10, "sts oracle", c10_sts_oracle);
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures;
}
