// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ghostpeak/campaign.hpp"
#include "ghostpeak/ranging.hpp"

using namespace ghostpeak;

namespace {

constexpr double kNs = 1000.0;  // ps per ns
constexpr double kTs = 1e12 / kDefaultSampleRateHz;

long double full_oracle(long double r1, long double p1, long double r2, long double p2) {
  return static_cast<long double>(kSpeedOfLight) * 1e-12L * (r1 * r2 - p1 * p2) / (r1 + r2 + p1 + p2);
}
long double simple_oracle(long double r1, long double p1, long double r2, long double p2) {
  return static_cast<long double>(kSpeedOfLight) * 1e-12L * (r1 + r2 - p1 - p2) / 4.0L;
}

// Grid-aligned scenario: tick divides the sample period and the flight time is whole samples,
// so benign measurements carry no rounding bias.
ScenarioConfig grid_scenario() {
  ScenarioConfig c;
  c.tick_ps = kTs / 32.0;
  c.true_distance_m = meters_from_ps(102 * kTs);
  c.start_jitter_ps = 0.0;
  c.n_trials = 400;
  c.baseline_trials = 20;
  c.attack.sts_gain = 5.0;
  return c;
}

}  // namespace

TEST(SsTwr, Examples) {
  EXPECT_NEAR(ss_twr_distance(1020 * kNs, 1000 * kNs), 2.99792458, 1e-9);
  EXPECT_EQ(ss_twr_distance(1000 * kNs, 1000 * kNs), 0.0);
  EXPECT_THROW(ss_twr_distance(999 * kNs, 1000 * kNs), MeasurementError);
}

TEST(DsTwr, SymmetricExample) {
  const double c10ns = kSpeedOfLight * 10e-9;
  EXPECT_NEAR(ds_twr_distance_full(1020 * kNs, 1000 * kNs, 1020 * kNs, 1000 * kNs), c10ns, 1e-12);
  EXPECT_NEAR(ds_twr_distance_simple(1020 * kNs, 1000 * kNs, 1020 * kNs, 1000 * kNs), c10ns, 1e-12);
  EXPECT_EQ(ds_twr_distance_full(1000 * kNs, 1000 * kNs, 1000 * kNs, 1000 * kNs), 0.0);
}

TEST(DsTwr, NonpositiveDenominatorIsAnError) {
  EXPECT_THROW(ds_twr_distance_full(0, 0, 0, 0), MeasurementError);
  EXPECT_THROW(ds_twr_distance_full(-5, 1, 1, 1), MeasurementError);
}

TEST(DsTwr, SimpleMayGoNegative) {
  EXPECT_LT(ds_twr_distance_simple(990 * kNs, 1000 * kNs, 995 * kNs, 1000 * kNs), 0.0);
}

TEST(DsTwr, ResponderDriftExampleMatchesOracle) {
  // Literal construction: t_round2 and t_reply2 scaled by 1 + 100 ppm.
  const double k = 1.0 + 100e-6;
  const double a[4] = {1020 * kNs, 1000 * kNs, 1020 * kNs * k, 1000 * kNs * k};
  const double truth = kSpeedOfLight * 10e-9;
  const double full = ds_twr_distance_full(a[0], a[1], a[2], a[3]);
  const double simple = ds_twr_distance_simple(a[0], a[1], a[2], a[3]);
  EXPECT_NEAR(full, static_cast<double>(full_oracle(a[0], a[1], a[2], a[3])), 1e-12);
  EXPECT_NEAR(simple, static_cast<double>(simple_oracle(a[0], a[1], a[2], a[3])), 1e-12);
  EXPECT_LT(std::abs(full - truth), 1e-3);
  // Scaling a duration that is not cancelled by its partner: only t_reply2 drifts.
  const double simple_drift = ds_twr_distance_simple(a[0], a[1], 1020 * kNs, 1000 * kNs * k);
  EXPECT_NEAR(std::abs(simple_drift - truth), kSpeedOfLight * (100e-6 * 1000e-9) / 4.0, 1e-6);
}

TEST(DsTwr, FormulasAgreeWithIdealClocks) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> reply(100'000'000, 5'000'000'000);
  std::uniform_int_distribution<std::int64_t> tof(0, 200'000);
  for (int i = 0; i < 100000; ++i) {
    const double p1 = static_cast<double>(reply(rng)), p2 = static_cast<double>(reply(rng));
    const double t2 = 2.0 * static_cast<double>(tof(rng));
    const double full = ds_twr_distance_full(p1 + t2, p1, p2 + t2, p2);
    const double simple = ds_twr_distance_simple(p1 + t2, p1, p2 + t2, p2);
    ASSERT_NEAR(full, simple, 1e-12) << i;
    ASSERT_NEAR(simple, meters_from_ps(t2 / 2.0), 1e-12);
  }
}

TEST(DsTwr, FullFormulaMoreRobustToClockDrift) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int better = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double tof = 1e3 + 1e5 * u(rng);
    const double r1 = 2e8 + 2e9 * u(rng);       // responder reply (true)
    const double r2 = r1 + (0.1 + u(rng)) * 1e9; // asymmetric initiator reply
    const double ppm = (u(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + 99.0 * u(rng));
    const double k = 1.0 + ppm * 1e-6;
    // Responder measures t_reply1 and t_round2 on its drifting clock.
    const double truth = meters_from_ps(tof);
    const double e1 = std::abs(ds_twr_distance_full(2 * tof + r1, r1 * k, (2 * tof + r2) * k, r2) - truth);
    const double e2 = std::abs(ds_twr_distance_simple(2 * tof + r1, r1 * k, (2 * tof + r2) * k, r2) - truth);
    if (e1 < e2) ++better;
  }
  EXPECT_GE(better, n * 99 / 100);
}

TEST(PredictedReduction, Examples) {
  const double delta = 66.713 * kNs;
  EXPECT_NEAR(predicted_reduction(AttackTarget::packet2, delta), 10.0, 1e-4);
  EXPECT_NEAR(predicted_reduction(AttackTarget::packet3, delta), 5.0, 1e-4);
  EXPECT_NEAR(predicted_reduction(AttackTarget::both, delta), 15.0, 1e-4);
  EXPECT_DOUBLE_EQ(predicted_reduction(AttackTarget::packet2, delta), 2.0 * predicted_reduction(AttackTarget::packet3, delta));
  EXPECT_NEAR(predicted_reduction(delta, 0.5 * delta), 12.5, 1e-4);
  EXPECT_THROW(predicted_reduction(AttackTarget::packet2, -1.0), MeasurementError);
}

TEST(PredictedReduction, MatchesFormulaPerturbation) {
  // Packet 2 early by delta: t_round1 and t_round2 shrink. Packet 3 early: only t_round2.
  const double r1 = 1e9, r2 = 1e9, tof = 5e4;
  for (double delta : {488.28125, 16 * 488.28125, 66713.0}) {
    const double base = ds_twr_distance_simple(2 * tof + r1, r1, 2 * tof + r2, r2);
    const double p2 = ds_twr_distance_simple(2 * tof + r1 - delta, r1, 2 * tof + r2 - delta, r2);
    const double p3 = ds_twr_distance_simple(2 * tof + r1, r1, 2 * tof + r2 - delta, r2);
    EXPECT_NEAR(base - p2, predicted_reduction(AttackTarget::packet2, delta), 1e-9);
    EXPECT_NEAR(base - p3, predicted_reduction(AttackTarget::packet3, delta), 1e-9);
  }
}

TEST(DeviceClock, TicksAndValidation) {
  DeviceClock c{0.0, 0.0, 15.65};
  EXPECT_EQ(c.ticks_at(15.64), 0);
  EXPECT_EQ(c.ticks_at(15.65), 1);
  EXPECT_EQ(c.ticks_for(1e9), std::llround(1e9 / 15.65));
  DeviceClock fast{100.0, 50.0, 15.65};
  EXPECT_NEAR(fast.true_from_local(fast.local_from_true(123456.0)), 123456.0, 1e-6);
  DeviceClock bad{0.0, 1000.0, 15.65};
  EXPECT_THROW(bad.validate(), ConfigError);
  DeviceClock zero{0.0, 0.0, 0.0};
  EXPECT_THROW(zero.validate(), ConfigError);
}

TEST(RunExchange, NoiselessTenMetres) {
  ScenarioConfig c;
  c.true_distance_m = 10.0;
  c.noise_sigma = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto seed = trial_seed(3, i);
    auto ex = run_exchange(build_exchange(c, seed, false), seed);
    ASSERT_EQ(ex.status, ExchangeStatus::ok);
    ASSERT_EQ(ex.packets.size(), 3u);
    EXPECT_NEAR(ex.distance_full, 10.0, meters_from_ps(kTs) / 2.0 + meters_from_ps(c.tick_ps));
    EXPECT_GE(ex.t_round1, 0.0);
    EXPECT_GE(ex.t_reply1, 0.0);
    EXPECT_GE(ex.t_round2, 0.0);
    EXPECT_GE(ex.t_reply2, 0.0);
  }
}

TEST(RunExchange, GridScenarioIsExact) {
  auto c = grid_scenario();
  c.noise_sigma = 0.0;
  auto ex = run_exchange(build_exchange(c, 5, false), 5);
  ASSERT_EQ(ex.status, ExchangeStatus::ok);
  EXPECT_NEAR(ex.distance_full, c.true_distance_m, 1e-9);
  EXPECT_NEAR(ex.distance_simple, c.true_distance_m, 1e-9);
}

TEST(RunExchange, DeterministicPerSeed) {
  ScenarioConfig c;
  c.attack.sts_gain = 5.0;
  auto cfg = build_exchange(c, 99, true);
  auto a = run_exchange(cfg, 99);
  auto b = run_exchange(cfg, 99);
  EXPECT_EQ(a.distance_full, b.distance_full);
  EXPECT_EQ(a.t_round2, b.t_round2);
  EXPECT_EQ(a.emissions.size(), b.emissions.size());
}

TEST(RunExchange, FreshCounterPerPacket) {
  ScenarioConfig c;
  auto cfg = build_exchange(c, 7, false);
  auto ex = run_exchange(cfg, 7);
  ASSERT_EQ(ex.emissions.size(), 3u);
  EXPECT_NE(ex.emissions[0].digest, ex.emissions[1].digest);
  EXPECT_NE(ex.emissions[1].digest, ex.emissions[2].digest);
  auto p2 = cfg.packet;
  p2.sts->counter += 1;
  EXPECT_EQ(ex.emissions[1].digest, spec_digest(p2));
}

TEST(RunExchange, SsTwrUsesTwoPackets) {
  ScenarioConfig c;
  c.mode = RangingMode::ss_twr;
  auto ex = run_exchange(build_exchange(c, 8, false), 8);
  ASSERT_EQ(ex.status, ExchangeStatus::ok);
  EXPECT_EQ(ex.packets.size(), 2u);
  EXPECT_NEAR(ex.distance_full, 15.0, 0.2);
}

TEST(RunExchange, ClockDriftFavoursFullFormula) {
  ScenarioConfig c;
  c.responder_ppm = 40.0;
  c.reply2_ps = 3e9;
  c.noise_sigma = 0.0;
  auto ex = run_exchange(build_exchange(c, 9, false), 9);
  ASSERT_EQ(ex.status, ExchangeStatus::ok);
  EXPECT_LT(std::abs(ex.distance_full - 15.0), 0.2);
  EXPECT_GT(std::abs(ex.distance_simple - 15.0), 1.0);
}

TEST(RunExchange, FinalDataMessageSurvivesAttack) {
  ScenarioConfig c;
  c.final_data_message = true;
  c.attack.targets = parse_targets("packet2+packet3");
  c.attack.sts_gain = 3.0;
  int ok = 0;
  for (int i = 0; i < 30; ++i) {
    const auto seed = trial_seed(4, i);
    auto ex = run_exchange(build_exchange(c, seed, true), seed);
    if (ex.status == ExchangeStatus::ok) {
      ++ok;
      EXPECT_EQ(ex.packets.size(), 4u);
    }
  }
  EXPECT_GE(ok, 20);
}

TEST(RunExchange, AttackShiftsRecordedRoundTimes) {
  for (const char* target : {"packet2", "packet3"}) {
    auto c = grid_scenario();
    c.attack.targets = parse_targets(target);
    const bool p2 = c.attack.targets.packet2;
    int checked = 0;
    for (int i = 0; i < 400 && checked < 10; ++i) {
      const auto seed = trial_seed(6, i);
      auto att = run_exchange(build_exchange(c, seed, true), seed);
      const auto* pk = att.packet(p2 ? 2 : 3);
      if (att.status != ExchangeStatus::ok || !pk->toa->leading_edge_used) continue;
      auto ben = run_exchange(build_exchange(c, seed, false), seed);
      ASSERT_EQ(ben.status, ExchangeStatus::ok);
      const double delta = att.advance_ps(p2 ? 2 : 3) - ben.advance_ps(p2 ? 2 : 3);
      EXPECT_GT(delta, 0.0);
      EXPECT_LE(delta, c.receiver.backsearch_window * kTs + 1e-6);
      const double tick = c.tick_ps;
      EXPECT_NEAR(ben.t_round1 - att.t_round1, p2 ? delta : 0.0, tick);
      EXPECT_NEAR(ben.t_round2 - att.t_round2, delta, tick);
      EXPECT_NEAR(att.t_reply1, ben.t_reply1, tick);
      EXPECT_NEAR(att.t_reply2, ben.t_reply2, tick);
      EXPECT_NEAR(ben.distance_simple - att.distance_simple,
                  predicted_reduction(p2 ? AttackTarget::packet2 : AttackTarget::packet3, delta),
                  meters_from_ps(tick));
      ++checked;
    }
    EXPECT_EQ(checked, 10) << target;
  }
}

TEST(RunExchange, ToaNeverBeforeBacksearchBound) {
  ScenarioConfig c;
  c.attack.sts_gain = 8.0;
  c.attack.targets = parse_targets("both");
  for (int i = 0; i < 200; ++i) {
    const auto seed = trial_seed(10, i);
    auto ex = run_exchange(build_exchange(c, seed, true), seed);
    for (const auto& p : ex.packets) {
      if (!p.toa) continue;
      EXPECT_LE(p.toa->peak_index - p.toa->accepted_index, c.receiver.backsearch_window);
    }
  }
}
