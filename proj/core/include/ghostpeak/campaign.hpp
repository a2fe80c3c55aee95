// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ghostpeak/attack.hpp"
#include "ghostpeak/ranging.hpp"
#include "ghostpeak/receiver.hpp"
#include "ghostpeak/trace.hpp"

namespace ghostpeak {

enum class DistanceFormula { full, simple };

struct ScenarioConfig {
  double true_distance_m = 15.0;
  int n_trials = 1000;
  int baseline_trials = 100;
  std::uint64_t master_seed = 1;
  int threads = 1;
  RangingMode mode = RangingMode::ds_twr;
  DistanceFormula distance_formula = DistanceFormula::full;

  // Clocks
  double tick_ps = kDefaultTickPs;
  double initiator_ppm = 0.0;
  double responder_ppm = 0.0;
  double initiator_offset_ps = 0.0;
  double responder_offset_ps = 0.0;
  double start_ps = 1e6;
  double start_jitter_ps = 1e6;      // uniform per trial
  double trial_interval_ps = 1e10;   // spacing of trials on the trace timeline

  // Channel
  double noise_sigma = 0.02;
  double nlos_excess_delay_ps = 0.0;
  double nlos_relative_gain = 0.0;

  // Packet and PHY
  std::uint64_t preamble_code_seed = 0x5EEDC0DE;
  int preamble_code_length = 127;
  int preamble_repetitions = 64;
  std::vector<std::int8_t> sfd = default_sfd();
  int sts_length_bits = 256;
  std::uint64_t sts_key_seed = 0;  // 0: fresh session key per trial
  int pulses_per_data_bit = 64;
  PulseShape pulse;
  double sample_rate_hz = kDefaultSampleRateHz;

  ReceiverConfig receiver;

  double reply1_ps = 1e9;
  double reply2_ps = 1e9;
  bool final_data_message = false;
  double reply3_ps = 1e9;
  int final_data_bits = 64;

  // Attack. Channels inside are filled from the geometry below.
  AttackConfig attack = default_attack();
  bool attack_auto_delay = true;  // delays from the reply times and geometry
  double attacker_distance_m = 0.3;
  double attacker_noise_sigma = 0.0;

  double histogram_bin_m = 0.25;
  int rolling_window = 300;

  static AttackConfig default_attack();
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Exchange configuration for one trial; attack controls whether the attacker is armed.
ExchangeConfig build_exchange(const ScenarioConfig& cfg, std::uint64_t trial_seed, bool attack);

double measured_distance(const ScenarioConfig& cfg, const RangingExchange& ex);

struct BaselineResult {
  double max_negative_deviation_m = 0.0;
  int failed_trials = 0;
  std::vector<double> errors_m;  // measured - true for completed trials
};

BaselineResult run_baseline(const ScenarioConfig& cfg);
bool is_reduction(double measured_m, double true_distance_m, double baseline_max_neg_dev_m);

struct TrialOutcome {
  int trial = 0;
  std::uint64_t seed = 0;
  ExchangeStatus status = ExchangeStatus::ok;
  double distance_m = 0.0;
  double reduction_m = 0.0;
  bool is_reduction = false;
  double advance2_ps = 0.0;
  double advance3_ps = 0.0;
  bool leading_edge2 = false;
  bool leading_edge3 = false;
};

struct Histogram {
  double bin_width = 0.25;
  std::vector<std::uint64_t> counts;  // bin k covers [k*w, (k+1)*w)
  std::uint64_t total() const;
};

struct CampaignResult {
  std::vector<TrialOutcome> measurements;
  BaselineResult baseline;
  double baseline_max_neg_dev = 0.0;
  double success_rate = 0.0;
  double loss_rate = 0.0;
  Histogram reduction_histogram;
  std::vector<double> rolling_rate;
  double max_reduction = 0.0;

  std::vector<double> successful_reductions() const;
};

/// Runs the baseline then n_trials exchanges. When trace is non-null it receives
/// every record of the attacked trials in timeline order.
CampaignResult run_campaign(const ScenarioConfig& cfg, std::vector<TraceRecord>* trace = nullptr);

struct CalibrationResult {
  double max_ok_sigma = 0.0;       // largest sigma still meeting the benign envelope
  double recommended_sigma = 0.0;  // max_ok_sigma backed off by margin_db
  double margin_db = 0.0;
  int trials_per_step = 0;
};

/// Benign envelope at cfg.true_distance_m: every exchange completes, no early-path
/// detection, >= 99% of errors within 0.20 m. Bisects noise_sigma on a log scale.
bool benign_envelope_ok(const ScenarioConfig& cfg, int trials);
CalibrationResult calibrate_noise(const ScenarioConfig& cfg, int trials, double margin_db = 12.0);

std::uint64_t trial_seed(std::uint64_t master_seed, int trial);

void write_csv(const ScenarioConfig& cfg, const CampaignResult& result, std::ostream& os);

/// Trace records for one exchange, with the trial's timeline offset applied.
std::vector<TraceRecord> exchange_records(const ScenarioConfig& cfg, const RangingExchange& ex, int trial,
                                          double baseline_max_neg_dev);

}  // namespace ghostpeak
