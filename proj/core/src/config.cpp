// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/program_options.hpp>
#include <fmt/format.h>

namespace ghostpeak {
namespace {

namespace po = boost::program_options;

struct Knob {
  std::string name;
  std::string doc;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& v, const char* what) {
  throw ConfigError("malformed " + std::string(what) + " value '" + v + "'");
}

double to_double(const std::string& s) {
  const std::string v = boost::trim_copy(s);
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad_value(s, "number");
  return out;
}

std::uint64_t to_u64(const std::string& s) {
  std::string v = boost::trim_copy(s);
  int base = 10;
  if (boost::istarts_with(v, "0x")) {
    v = v.substr(2);
    base = 16;
  }
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(s, "unsigned integer");
  return out;
}

int to_int(const std::string& s) {
  const std::string v = boost::trim_copy(s);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(s, "integer");
  return out;
}

bool to_bool(const std::string& s) {
  const std::string v = boost::to_lower_copy(boost::trim_copy(s));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(s, "boolean");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class Acc>
Knob dbl(std::string name, std::string doc, Acc acc) {
  return {std::move(name), std::move(doc), [acc](const ScenarioConfig& c) { return fmt::format("{}", acc(c)); },
          [acc](ScenarioConfig& c, const std::string& v) { acc(c) = to_double(v); }};
}
template <class Acc>
Knob integer(std::string name, std::string doc, Acc acc) {
  return {std::move(name), std::move(doc), [acc](const ScenarioConfig& c) { return fmt::format("{}", acc(c)); },
          [acc](ScenarioConfig& c, const std::string& v) { acc(c) = to_int(v); }};
}
template <class Acc>
Knob u64(std::string name, std::string doc, Acc acc) {
  return {std::move(name), std::move(doc), [acc](const ScenarioConfig& c) { return fmt::format("{}", acc(c)); },
          [acc](ScenarioConfig& c, const std::string& v) { acc(c) = to_u64(v); }};
}
template <class Acc>
Knob boolean(std::string name, std::string doc, Acc acc) {
  return {std::move(name), std::move(doc), [acc](const ScenarioConfig& c) { return fmt_bool(acc(c)); },
          [acc](ScenarioConfig& c, const std::string& v) { acc(c) = to_bool(v); }};
}

std::string join_sfd(const std::vector<std::int8_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::int8_t> parse_sfd(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<std::int8_t> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (p.empty()) continue;
    const int v = to_int(p);
    if (v < -1 || v > 1) bad_value(s, "ternary sequence");
    out.push_back(static_cast<std::int8_t>(v));
  }
  return out;
}

const std::vector<Knob>& knobs() {
  static const std::vector<Knob> k = [] {
    std::vector<Knob> v;
    v.push_back(dbl("scenario.true_distance_m", "true initiator-responder distance in metres",
                    [](auto& c) -> auto& { return c.true_distance_m; }));
    v.push_back(integer("scenario.n_trials", "attacked exchanges per campaign", [](auto& c) -> auto& { return c.n_trials; }));
    v.push_back(integer("scenario.baseline_trials", "benign exchanges for the baseline deviation",
                        [](auto& c) -> auto& { return c.baseline_trials; }));
    v.push_back(u64("scenario.master_seed", "seed of all per-trial generators", [](auto& c) -> auto& { return c.master_seed; }));
    v.push_back(integer("scenario.threads", "worker threads", [](auto& c) -> auto& { return c.threads; }));
    v.push_back({"scenario.mode", "ds-twr or ss-twr",
                 [](const ScenarioConfig& c) { return std::string(c.mode == RangingMode::ds_twr ? "ds-twr" : "ss-twr"); },
                 [](ScenarioConfig& c, const std::string& s) {
                   const auto t = boost::trim_copy(s);
                   if (t == "ds-twr") c.mode = RangingMode::ds_twr;
                   else if (t == "ss-twr") c.mode = RangingMode::ss_twr;
                   else bad_value(s, "mode");
                 }});
    v.push_back({"scenario.distance_formula", "full (asymmetric) or simple (averaged) DS-TWR estimate",
                 [](const ScenarioConfig& c) { return std::string(c.distance_formula == DistanceFormula::full ? "full" : "simple"); },
                 [](ScenarioConfig& c, const std::string& s) {
                   const auto t = boost::trim_copy(s);
                   if (t == "full") c.distance_formula = DistanceFormula::full;
                   else if (t == "simple") c.distance_formula = DistanceFormula::simple;
                   else bad_value(s, "distance formula");
                 }});
    v.push_back(dbl("scenario.histogram_bin_m", "reduction histogram bin width", [](auto& c) -> auto& { return c.histogram_bin_m; }));
    v.push_back(integer("scenario.rolling_window", "trials per rolling success-rate window",
                        [](auto& c) -> auto& { return c.rolling_window; }));
    v.push_back(dbl("scenario.trial_interval_ps", "trace timeline spacing between trials",
                    [](auto& c) -> auto& { return c.trial_interval_ps; }));

    v.push_back(dbl("clock.tick_ps", "timestamp quantum of both devices", [](auto& c) -> auto& { return c.tick_ps; }));
    v.push_back(dbl("clock.initiator_ppm", "initiator frequency error", [](auto& c) -> auto& { return c.initiator_ppm; }));
    v.push_back(dbl("clock.responder_ppm", "responder frequency error", [](auto& c) -> auto& { return c.responder_ppm; }));
    v.push_back(dbl("clock.initiator_offset_ps", "initiator clock offset", [](auto& c) -> auto& { return c.initiator_offset_ps; }));
    v.push_back(dbl("clock.responder_offset_ps", "responder clock offset", [](auto& c) -> auto& { return c.responder_offset_ps; }));
    v.push_back(dbl("clock.start_ps", "nominal first RMARKER time", [](auto& c) -> auto& { return c.start_ps; }));
    v.push_back(dbl("clock.start_jitter_ps", "uniform per-trial start jitter", [](auto& c) -> auto& { return c.start_jitter_ps; }));

    v.push_back(dbl("channel.noise_sigma", "per-sample complex noise std at each receiver",
                    [](auto& c) -> auto& { return c.noise_sigma; }));
    v.push_back(dbl("channel.nlos_excess_delay_ps", "delay of the optional reflected path",
                    [](auto& c) -> auto& { return c.nlos_excess_delay_ps; }));
    v.push_back(dbl("channel.nlos_relative_gain", "amplitude of the reflected path relative to LoS (0 = none)",
                    [](auto& c) -> auto& { return c.nlos_relative_gain; }));

    v.push_back(dbl("phy.sample_rate_hz", "baseband sample rate", [](auto& c) -> auto& { return c.sample_rate_hz; }));
    v.push_back({"phy.pulse_kind", "root-raised-cosine, gaussian-monopulse or rectangular",
                 [](const ScenarioConfig& c) {
                   switch (c.pulse.kind) {
                     case PulseKind::root_raised_cosine: return std::string("root-raised-cosine");
                     case PulseKind::gaussian_monopulse: return std::string("gaussian-monopulse");
                     case PulseKind::rectangular: return std::string("rectangular");
                   }
                   return std::string();
                 },
                 [](ScenarioConfig& c, const std::string& s) {
                   const auto t = boost::trim_copy(s);
                   if (t == "root-raised-cosine") c.pulse.kind = PulseKind::root_raised_cosine;
                   else if (t == "gaussian-monopulse") c.pulse.kind = PulseKind::gaussian_monopulse;
                   else if (t == "rectangular") c.pulse.kind = PulseKind::rectangular;
                   else bad_value(s, "pulse kind");
                 }});
    v.push_back(dbl("phy.pulse_duration_s", "pulse main-lobe duration", [](auto& c) -> auto& { return c.pulse.duration_s; }));
    v.push_back(integer("phy.samples_per_pulse", "samples per pulse", [](auto& c) -> auto& { return c.pulse.samples_per_pulse; }));
    v.push_back(u64("phy.preamble_code_seed", "seed of the ternary preamble code", [](auto& c) -> auto& { return c.preamble_code_seed; }));
    v.push_back(integer("phy.preamble_code_length", "preamble code length", [](auto& c) -> auto& { return c.preamble_code_length; }));
    v.push_back(integer("phy.preamble_repetitions", "preamble symbols per packet", [](auto& c) -> auto& { return c.preamble_repetitions; }));
    v.push_back({"phy.sfd", "comma separated ternary SFD", [](const ScenarioConfig& c) { return join_sfd(c.sfd); },
                 [](ScenarioConfig& c, const std::string& s) { c.sfd = parse_sfd(s); }});
    v.push_back(integer("phy.sts_length_bits", "STS length (multiple of 128)", [](auto& c) -> auto& { return c.sts_length_bits; }));
    v.push_back(u64("phy.sts_key_seed", "fixed session key seed; 0 draws a fresh key per trial",
                    [](auto& c) -> auto& { return c.sts_key_seed; }));
    v.push_back(integer("phy.pulses_per_data_bit", "pulses spreading one data bit", [](auto& c) -> auto& { return c.pulses_per_data_bit; }));

    v.push_back(integer("receiver.backsearch_window", "lags searched before the strongest peak",
                        [](auto& c) -> auto& { return c.receiver.backsearch_window; }));
    v.push_back(dbl("receiver.detect_threshold_db", "peak over noise floor needed to detect",
                    [](auto& c) -> auto& { return c.receiver.detect_threshold_db; }));
    v.push_back(dbl("receiver.leading_edge_threshold_db", "early peak over noise floor needed to accept",
                    [](auto& c) -> auto& { return c.receiver.leading_edge_threshold_db; }));
    v.push_back(dbl("receiver.leading_edge_rel_max_db", "largest accepted distance below the strongest peak",
                    [](auto& c) -> auto& { return c.receiver.leading_edge_rel_max_db; }));
    v.push_back({"receiver.noise_estimator", "median-abs or trimmed-mean",
                 [](const ScenarioConfig& c) {
                   return std::string(c.receiver.noise_estimator == NoiseEstimator::median_abs ? "median-abs" : "trimmed-mean");
                 },
                 [](ScenarioConfig& c, const std::string& s) {
                   const auto t = boost::trim_copy(s);
                   if (t == "median-abs") c.receiver.noise_estimator = NoiseEstimator::median_abs;
                   else if (t == "trimmed-mean") c.receiver.noise_estimator = NoiseEstimator::trimmed_mean;
                   else bad_value(s, "noise estimator");
                 }});
    v.push_back({"receiver.sts_bit_check", "demodulate STS signs at the accepted lag",
                 [](const ScenarioConfig& c) { return fmt_bool(c.receiver.sts_bit_check.has_value()); },
                 [](ScenarioConfig& c, const std::string& s) {
                   if (to_bool(s)) {
                     if (!c.receiver.sts_bit_check) c.receiver.sts_bit_check = StsBitCheck{};
                   } else {
                     c.receiver.sts_bit_check.reset();
                   }
                 }});
    v.push_back({"receiver.max_bit_errors", "bit errors tolerated by the STS bit check (used when enabled)",
                 [](const ScenarioConfig& c) {
                   return std::to_string(c.receiver.sts_bit_check ? c.receiver.sts_bit_check->max_bit_errors : 0);
                 },
                 [](ScenarioConfig& c, const std::string& s) {
                   const int v = to_int(s);
                   if (c.receiver.sts_bit_check) c.receiver.sts_bit_check->max_bit_errors = v;
                   else if (v < 0) bad_value(s, "max_bit_errors");
                 }});
    v.push_back(boolean("receiver.require_local_max", "early peaks must be local maxima",
                        [](auto& c) -> auto& { return c.receiver.require_local_max; }));
    v.push_back(dbl("receiver.min_sts_quality", "normalized STS correlation required at the main peak",
                    [](auto& c) -> auto& { return c.receiver.min_sts_quality; }));
    v.push_back(integer("receiver.acquisition_symbols", "preamble symbols folded for acquisition",
                        [](auto& c) -> auto& { return c.receiver.acquisition_symbols; }));
    v.push_back(integer("receiver.acquisition_lags", "acquisition search span in samples",
                        [](auto& c) -> auto& { return c.receiver.acquisition_lags; }));
    v.push_back(integer("receiver.sts_search_half_width", "STS search span either side of the coarse estimate",
                        [](auto& c) -> auto& { return c.receiver.sts_search_half_width; }));

    v.push_back(dbl("ranging.reply1_ps", "responder reply delay", [](auto& c) -> auto& { return c.reply1_ps; }));
    v.push_back(dbl("ranging.reply2_ps", "initiator reply delay", [](auto& c) -> auto& { return c.reply2_ps; }));
    v.push_back(boolean("ranging.final_data_message", "send the non-ranging fourth message",
                        [](auto& c) -> auto& { return c.final_data_message; }));
    v.push_back(dbl("ranging.reply3_ps", "delay before the fourth message", [](auto& c) -> auto& { return c.reply3_ps; }));
    v.push_back(integer("ranging.final_data_bits", "payload bits of the fourth message",
                        [](auto& c) -> auto& { return c.final_data_bits; }));

    v.push_back(boolean("attack.enabled", "arm the attacker", [](auto& c) -> auto& { return c.attack.enabled; }));
    v.push_back({"attack.targets", "packet2, packet3 or packet2+packet3",
                 [](const ScenarioConfig& c) { return to_string(c.attack.targets); },
                 [](ScenarioConfig& c, const std::string& s) { c.attack.targets = parse_targets(s); }});
    v.push_back(boolean("attack.auto_delay", "derive delays from the reply times and the geometry", [](auto& c) -> auto& { return c.attack_auto_delay; }));
    v.push_back(dbl("attack.delay_packet2_ps", "trigger-to-emission delay for packet 2 (auto_delay=false)",
                    [](auto& c) -> auto& { return c.attack.delay_packet2_ps; }));
    v.push_back(dbl("attack.delay_packet3_ps", "trigger-to-emission delay for packet 3 (auto_delay=false)",
                    [](auto& c) -> auto& { return c.attack.delay_packet3_ps; }));
    v.push_back(dbl("attack.timing_jitter_sigma_ps", "Gaussian emission jitter",
                    [](auto& c) -> auto& { return c.attack.timing_jitter_sigma_ps; }));
    v.push_back(dbl("attack.preamble_gain", "attacker preamble amplitude relative to the legit signal",
                    [](auto& c) -> auto& { return c.attack.preamble_gain; }));
    v.push_back(dbl("attack.sfd_gain", "attacker SFD amplitude", [](auto& c) -> auto& { return c.attack.sfd_gain; }));
    v.push_back(dbl("attack.sts_gain", "attacker STS amplitude", [](auto& c) -> auto& { return c.attack.sts_gain; }));
    v.push_back(u64("attack.sts_seed", "seed of the attacker's random STS", [](auto& c) -> auto& { return c.attack.sts_seed; }));
    v.push_back(dbl("attack.distance_m", "attacker distance to its victim", [](auto& c) -> auto& { return c.attacker_distance_m; }));
    v.push_back(dbl("attack.noise_sigma", "noise added on the attacker path", [](auto& c) -> auto& { return c.attacker_noise_sigma; }));
    return v;
  }();
  return k;
}

const Knob& find(const std::string& key) {
  for (const auto& k : knobs())
    if (k.name == key) return k;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::vector<KnobInfo> list_knobs() {
  const ScenarioConfig def;
  std::vector<KnobInfo> out;
  for (const auto& k : knobs()) out.push_back({k.name, k.get(def), k.doc});
  return out;
}

void set_knob(ScenarioConfig& cfg, const std::string& key, const std::string& value) { find(key).set(cfg, value); }

std::string get_knob(const ScenarioConfig& cfg, const std::string& key) { return find(key).get(cfg); }

ScenarioConfig parse_config_text(const std::string& text) {
  po::options_description desc;
  for (const auto& k : knobs()) desc.add_options()(k.name.c_str(), po::value<std::string>());
  po::variables_map vm;
  try {
    std::istringstream is(text);
    po::store(po::parse_config_file(is, desc, false), vm);
  } catch (const po::error& e) {
    throw ConfigError(e.what());
  }
  ScenarioConfig cfg;
  // Registry order, so that dependent keys (bit check before its error budget) apply correctly.
  for (const auto& k : knobs()) {
    auto it = vm.find(k.name);
    if (it == vm.end()) continue;
    try {
      k.set(cfg, it->second.as<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(k.name + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& k : knobs()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace ghostpeak
