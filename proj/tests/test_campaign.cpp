// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "ghostpeak/campaign.hpp"
#include "ghostpeak/stats.hpp"

using namespace ghostpeak;

namespace {

constexpr double kTs = 1e12 / kDefaultSampleRateHz;

ScenarioConfig grid_scenario() {
  ScenarioConfig c;
  c.tick_ps = kTs / 32.0;
  c.true_distance_m = meters_from_ps(102 * kTs);
  c.start_jitter_ps = 0.0;
  return c;
}

std::string csv_of(const ScenarioConfig& c) {
  std::ostringstream os;
  write_csv(c, run_campaign(c), os);
  return os.str();
}

}  // namespace

TEST(IsReduction, Examples) {
  EXPECT_TRUE(is_reduction(7.5, 8.0, 0.15));
  EXPECT_FALSE(is_reduction(7.8, 8.0, 0.15));
  EXPECT_TRUE(is_reduction(-0.3, 8.0, 0.15));
  EXPECT_FALSE(is_reduction(7.7, 8.0, 0.15));
}

TEST(Baseline, NoiselessGridGeometryIsZero) {
  auto c = grid_scenario();
  c.noise_sigma = 0.0;
  c.baseline_trials = 20;
  auto b = run_baseline(c);
  EXPECT_EQ(b.failed_trials, 0);
  EXPECT_NEAR(b.max_negative_deviation_m, 0.0, 1e-9);
}

TEST(Baseline, DefaultNoiseWithinBenignBand) {
  ScenarioConfig c;
  auto b = run_baseline(c);
  EXPECT_EQ(b.failed_trials, 0);
  EXPECT_GE(b.max_negative_deviation_m, 0.05);
  EXPECT_LE(b.max_negative_deviation_m, 0.25);
  EXPECT_EQ(b.errors_m.size(), 100u);
  EXPECT_EQ(run_baseline(c).max_negative_deviation_m, b.max_negative_deviation_m);
}

TEST(Campaign, AttackDisabledNeverSucceeds) {
  ScenarioConfig c;
  c.n_trials = 200;
  c.attack.enabled = false;
  auto r = run_campaign(c);
  EXPECT_EQ(r.success_rate, 0.0);
  EXPECT_EQ(r.reduction_histogram.total(), 0u);
}

TEST(Campaign, ResultInvariants) {
  ScenarioConfig c;
  c.n_trials = 700;
  c.rolling_window = 300;
  c.attack.sts_gain = 5.0;
  auto r = run_campaign(c);
  ASSERT_EQ(r.measurements.size(), 700u);
  for (int i = 0; i < 700; ++i) {
    EXPECT_EQ(r.measurements[i].trial, i);
    EXPECT_EQ(r.measurements[i].seed, trial_seed(c.master_seed, i));
  }
  const auto succ = static_cast<std::uint64_t>(
      std::count_if(r.measurements.begin(), r.measurements.end(), [](const auto& m) { return m.is_reduction; }));
  EXPECT_GT(succ, 0u);
  EXPECT_EQ(r.reduction_histogram.total(), succ);
  EXPECT_DOUBLE_EQ(r.success_rate, static_cast<double>(succ) / 700.0);
  EXPECT_GE(r.success_rate, 0.0);
  EXPECT_LE(r.success_rate, 1.0);
  EXPECT_EQ(r.successful_reductions().size(), succ);
  EXPECT_EQ(r.rolling_rate.size(), 700u - 300u + 1u);
  for (double v : r.rolling_rate) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto red = r.successful_reductions();
  EXPECT_DOUBLE_EQ(r.max_reduction, *std::max_element(red.begin(), red.end()));
}

TEST(Campaign, Packet2ReductionsRespectWindowBound) {
  auto c = grid_scenario();
  c.n_trials = 1500;
  c.attack.sts_gain = 5.0;
  auto r = run_campaign(c);
  const double bound = meters_from_ps(c.receiver.backsearch_window * kTs + 2.0 * c.tick_ps) / 2.0;
  EXPECT_GT(r.max_reduction, 0.5 * bound);
  EXPECT_LE(r.max_reduction, bound);
}

TEST(Campaign, DualTargetMassBiasedToSmallReductions) {
  auto c = grid_scenario();
  c.n_trials = 1500;
  c.attack.sts_gain = 5.0;
  c.attack.targets = parse_targets("both");
  auto r = run_campaign(c);
  const auto red = r.successful_reductions();
  ASSERT_FALSE(red.empty());
  const double half = 0.5 * r.max_reduction;
  const auto low = std::count_if(red.begin(), red.end(), [&](double v) { return v <= half; });
  EXPECT_GT(low, static_cast<long>(red.size()) - low);
}

TEST(Campaign, CsvIdenticalAcrossThreadCounts) {
  ScenarioConfig c;
  c.n_trials = 120;
  c.attack.sts_gain = 5.0;
  c.threads = 1;
  const auto one = csv_of(c);
  c.threads = 4;
  EXPECT_EQ(csv_of(c), one);
  c.master_seed = 2;
  EXPECT_NE(csv_of(c), one);
}

TEST(Campaign, CsvFormat) {
  ScenarioConfig c;
  c.n_trials = 60;
  c.attack.sts_gain = 64.0;  // force some failures
  auto r = run_campaign(c);
  std::ostringstream os;
  write_csv(c, r, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "trial,status,distance_m,reduction_m,is_reduction,targets,seed");
  int rows = 0;
  bool saw_failure = false;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
    if (line.find(",,") != std::string::npos) saw_failure = true;
  }
  EXPECT_EQ(rows, 60);
  EXPECT_TRUE(saw_failure);
}

TEST(Campaign, TraceMatchesAttackedTrials) {
  ScenarioConfig c;
  c.n_trials = 5;
  std::vector<TraceRecord> trace;
  auto r = run_campaign(c, &trace);
  ASSERT_FALSE(trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LT(trace[i - 1].timestamp_ps, trace[i].timestamp_ps);
  const auto summaries = std::count_if(trace.begin(), trace.end(),
                                       [](const auto& t) { return t.type == RecordType::exchange_summary; });
  EXPECT_EQ(summaries, 5);
}

TEST(ExchangeRecords, EveryEmissionOnceAndOneRxPerDetection) {
  ScenarioConfig c;
  c.attack.sts_gain = 5.0;
  c.attack.targets = parse_targets("both");
  for (int i = 0; i < 10; ++i) {
    const auto seed = trial_seed(1, i);
    auto ex = run_exchange(build_exchange(c, seed, true), seed);
    auto recs = exchange_records(c, ex, i, 0.1);
    const auto tx = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.type == RecordType::tx; });
    EXPECT_EQ(static_cast<std::size_t>(tx), ex.emissions.size());
    for (const auto& p : ex.packets) {
      const auto rx = std::count_if(recs.begin(), recs.end(), [&](const auto& r) {
        const auto* f = std::get_if<RxFields>(&r.payload);
        return r.type == RecordType::rx && r.device_id == p.rx_id && f && f->packet_index == p.index;
      });
      EXPECT_EQ(rx, p.status == ReceptionStatus::ok ? 1 : 0);
    }
    const auto triggers = std::count_if(recs.begin(), recs.end(), [](const auto& r) {
      return r.type == RecordType::rx && r.device_id >= kAttackerNearInitiator;
    });
    EXPECT_EQ(static_cast<std::size_t>(triggers), ex.triggers.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const double ticks = static_cast<double>(recs[k].timestamp_ps) / c.tick_ps;
      EXPECT_NEAR(ticks, std::round(ticks), 0.5 / c.tick_ps + 1e-6);
      if (k) EXPECT_LT(recs[k - 1].timestamp_ps, recs[k].timestamp_ps);
    }
  }
}

TEST(Calibrate, RecommendsSigmaInsideEnvelope) {
  ScenarioConfig c;
  auto cal = calibrate_noise(c, 30, 12.0);
  EXPECT_GT(cal.max_ok_sigma, 0.02);
  EXPECT_LT(cal.max_ok_sigma, 0.5);
  EXPECT_NEAR(cal.recommended_sigma, cal.max_ok_sigma / std::pow(10.0, 12.0 / 20.0), 1e-12);
  c.noise_sigma = cal.recommended_sigma;
  EXPECT_TRUE(benign_envelope_ok(c, 30));
}

TEST(Stats, KsIdenticalAndShifted) {
  std::vector<double> a(500), b(500);
  std::iota(a.begin(), a.end(), 0.0);
  b = a;
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.0);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.99);
  for (auto& v : b) v += 100.0;
  EXPECT_NEAR(ks_two_sample(a, b).statistic, 0.2, 1e-12);
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Stats, KolmogorovTailKnownValues) {
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 3e-4);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Stats, SpearmanHandlesTiesAndMonotone) {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 8, 16, 32}, z{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman_rho(x, y), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(x, z), -1.0);
  std::vector<double> t{1, 1, 2, 2, 3};
  EXPECT_NEAR(spearman_rho(x, t), 0.9486832980505138, 1e-12);
}
