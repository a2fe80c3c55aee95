// SPDX-License-Identifier: Apache-2.0
// ghostpeak: command line front end for the ranging/attack simulator.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ghostpeak/campaign.hpp"
#include "ghostpeak/config.hpp"
#include "ghostpeak/trace.hpp"

using namespace ghostpeak;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::vector<std::string> sets;
  std::string out;
  std::string trace;
};

void add_common(CLI::App* app, Common& c, bool outputs) {
  app->add_option("--config", c.config, "scenario config file (key = value)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--trials", c.trials, "number of trials");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_option("--set", c.sets, "override one knob, key=value (repeatable)");
  if (outputs) {
    app->add_option("--out", c.out, "output path (default stdout)");
    app->add_option("--trace", c.trace, "write a binary trace");
  }
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg;
  if (!c.config.empty()) {
    std::ifstream probe(c.config);
    if (!probe) throw IoError("cannot open config file: " + c.config);
    cfg = parse_config(c.config);
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_knob(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.trials) cfg.n_trials = *c.trials;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

void save_trace(const std::string& path, const std::vector<TraceRecord>& recs) {
  try {
    write_trace(recs, path);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

int cmd_simulate(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const BaselineResult base = run_baseline(cfg);
  const std::uint64_t seed = trial_seed(cfg.master_seed, 0);
  const RangingExchange ex = run_exchange(build_exchange(cfg, seed, true), seed);
  std::string text;
  text += fmt::format("true distance {:.4f} m, baseline max negative deviation {:.4f} m\n", cfg.true_distance_m,
                      base.max_negative_deviation_m);
  for (const auto& e : ex.emissions)
    text += fmt::format("emit  dev=0x{:04x} {:<8} pkt={} rmarker={:.1f} ps gains={:.2f}/{:.2f}/{:.2f}\n", e.source_id,
                        e.attacker ? "attacker" : "legit", e.packet_index, e.rmarker_ps, e.gains.preamble, e.gains.sfd,
                        e.gains.sts);
  for (const auto& p : ex.packets) {
    text += fmt::format("rx    pkt={} 0x{:04x}->0x{:04x} status={}", p.index, p.tx_id, p.rx_id, to_string(p.status));
    if (p.toa)
      text += fmt::format(" toa_err={:.1f} ps peak={} accepted={} leading_edge={} quality={:.3f}",
                          p.toa->toa_ps - p.arrival_ps, p.toa->peak_index, p.toa->accepted_index,
                          p.toa->leading_edge_used ? "yes" : "no", p.toa->sts_quality);
    text += "\n";
  }
  text += fmt::format("status={} t_round1={:.2f} t_reply1={:.2f} t_round2={:.2f} t_reply2={:.2f} ps\n", to_string(ex.status),
                      ex.t_round1, ex.t_reply1, ex.t_round2, ex.t_reply2);
  if (ex.status == ExchangeStatus::ok) {
    const double m = measured_distance(cfg, ex);
    text += fmt::format("distance full={:.4f} m simple={:.4f} m reduction={:.4f} m is_reduction={}\n", ex.distance_full,
                        ex.distance_simple, cfg.true_distance_m - m,
                        is_reduction(m, cfg.true_distance_m, base.max_negative_deviation_m) ? "yes" : "no");
  }
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.out);
    if (!f || !(f << text)) throw IoError("cannot write " + c.out);
  }
  if (!c.trace.empty()) save_trace(c.trace, exchange_records(cfg, ex, 0, base.max_negative_deviation_m));
  return 0;
}

int cmd_campaign(const Common& c) {
  const ScenarioConfig cfg = load(c);
  std::vector<TraceRecord> trace;
  const CampaignResult r = run_campaign(cfg, c.trace.empty() ? nullptr : &trace);
  if (c.out.empty()) {
    write_csv(cfg, r, std::cout);
  } else {
    std::ofstream f(c.out, std::ios::trunc);
    if (!f) throw IoError("cannot open " + c.out);
    write_csv(cfg, r, f);
    if (!f) throw IoError("failed writing " + c.out);
  }
  if (!c.trace.empty()) save_trace(c.trace, trace);
  if (r.baseline.failed_trials > 0)
    std::cerr << fmt::format("warning: {} baseline exchanges failed; check noise and thresholds\n", r.baseline.failed_trials);
  std::cerr << fmt::format("trials={} success_rate={:.4f} loss_rate={:.4f} max_reduction={:.3f} m baseline_max_neg_dev={:.4f} m\n",
                           cfg.n_trials, r.success_rate, r.loss_rate, r.max_reduction, r.baseline_max_neg_dev);
  return 0;
}

int cmd_dissect(const std::string& path) {
  std::vector<TraceRecord> recs;
  try {
    recs = read_trace(path);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  dissect(recs, std::cout);
  return 0;
}

int cmd_calibrate(const Common& c, int steps_trials, double margin_db) {
  const ScenarioConfig cfg = load(c);
  const CalibrationResult r = calibrate_noise(cfg, steps_trials, margin_db);
  std::cout << fmt::format("# benign envelope holds up to noise_sigma = {:.5g} at {:.2f} m ({} trials per step)\n",
                           r.max_ok_sigma, cfg.true_distance_m, r.trials_per_step);
  std::cout << fmt::format("# recommended with {:.1f} dB margin:\nchannel.noise_sigma = {:.3g}\n", r.margin_db,
                           r.recommended_sigma);
  return 0;
}

int cmd_knobs() {
  for (const auto& k : list_knobs()) std::cout << fmt::format("{} = {}    # {}\n", k.name, k.default_value, k.doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB HRP ranging simulator with the ghost-peak overshadowing attack"};
  app.require_subcommand(1);

  Common sim, camp, cal;
  auto* s = app.add_subcommand("simulate", "run one exchange and print every packet decision");
  add_common(s, sim, true);
  auto* c = app.add_subcommand("campaign", "run N trials and write the CSV");
  add_common(c, camp, true);
  std::string trace_path;
  auto* d = app.add_subcommand("dissect", "render a binary trace");
  d->add_option("trace", trace_path, "trace file")->required();
  auto* k = app.add_subcommand("calibrate", "derive a noise_sigma that meets the benign error envelope");
  add_common(k, cal, false);
  int cal_trials = 300;
  double margin = 12.0;
  k->add_option("--step-trials", cal_trials, "exchanges per bisection step");
  k->add_option("--margin-db", margin, "back-off below the largest passing noise level");
  auto* kn = app.add_subcommand("knobs", "list every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*c) return cmd_campaign(camp);
    if (*d) return cmd_dissect(trace_path);
    if (*k) return cmd_calibrate(cal, cal_trials, margin);
    if (*kn) return cmd_knobs();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
