// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ghostpeak/config.hpp"

using namespace ghostpeak;

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config_text(""), ScenarioConfig{});
  EXPECT_EQ(parse_config_text("# only a comment\n\n"), ScenarioConfig{});
}

TEST(Config, NegativeBacksearchWindowRejected) {
  EXPECT_THROW(parse_config_text("receiver.backsearch_window = -1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[receiver]\nbacksearch_window = -1\n"), ConfigError);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config_text("receiver.no_such_knob = 1\n"), ConfigError);
  ScenarioConfig c;
  EXPECT_THROW(set_knob(c, "bogus", "1"), ConfigError);
}

TEST(Config, MalformedValuesRejected) {
  EXPECT_THROW(parse_config_text("scenario.n_trials = ten\n"), ConfigError);
  EXPECT_THROW(parse_config_text("receiver.noise_estimator = mean\n"), ConfigError);
  EXPECT_THROW(parse_config_text("attack.targets = packet7\n"), ConfigError);
  EXPECT_THROW(parse_config_text("phy.sts_length_bits = 100\n"), ConfigError);
  EXPECT_THROW(parse_config_text("scenario.baseline_trials = 5\n"), ConfigError);
  EXPECT_THROW(parse_config_text("scenario.n_trials = 0\n"), ConfigError);
}

TEST(Config, SectionsAndValues) {
  auto c = parse_config_text(
      "scenario.true_distance_m = 5.5\n"
      "[receiver]\n"
      "backsearch_window = 8\n"
      "noise_estimator = trimmed-mean\n"
      "sts_bit_check = true\n"
      "max_bit_errors = 3\n"
      "[attack]\n"
      "targets = packet2+packet3\n"
      "sts_gain = 0.33\n");
  EXPECT_EQ(c.true_distance_m, 5.5);
  EXPECT_EQ(c.receiver.backsearch_window, 8);
  EXPECT_EQ(c.receiver.noise_estimator, NoiseEstimator::trimmed_mean);
  ASSERT_TRUE(c.receiver.sts_bit_check);
  EXPECT_EQ(c.receiver.sts_bit_check->max_bit_errors, 3);
  EXPECT_TRUE(c.attack.targets.packet2 && c.attack.targets.packet3);
  EXPECT_EQ(c.attack.sts_gain, 0.33);
}

TEST(Config, RoundTripIsIdempotent) {
  ScenarioConfig c;
  set_knob(c, "scenario.true_distance_m", "7.123456789012345");
  set_knob(c, "attack.sts_gain", "0.1");
  set_knob(c, "phy.sfd", "1,-1,0,1");
  set_knob(c, "receiver.sts_bit_check", "true");
  set_knob(c, "receiver.max_bit_errors", "2");
  set_knob(c, "clock.tick_ps", "15.2587890625");
  set_knob(c, "scenario.master_seed", "18446744073709551615");
  set_knob(c, "phy.pulse_kind", "gaussian-monopulse");
  set_knob(c, "scenario.mode", "ss-twr");
  const auto once = parse_config_text(serialize_config(c));
  EXPECT_EQ(once, c);
  EXPECT_EQ(parse_config_text(serialize_config(once)), once);
  EXPECT_EQ(serialize_config(parse_config_text(serialize_config(ScenarioConfig{}))), serialize_config(ScenarioConfig{}));
}

TEST(Config, EveryKnobDocumentedAndReadable) {
  const ScenarioConfig def;
  const auto knobs = list_knobs();
  EXPECT_GE(knobs.size(), 50u);
  for (const auto& k : knobs) {
    EXPECT_FALSE(k.doc.empty()) << k.name;
    EXPECT_EQ(get_knob(def, k.name), k.default_value) << k.name;
    ScenarioConfig c;
    set_knob(c, k.name, k.default_value);
    EXPECT_EQ(c, def) << k.name;
  }
}

TEST(Config, FileInput) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "ghostpeak_config_test.ini";
  {
    std::ofstream f(path);
    f << "scenario.n_trials = 42\n";
  }
  EXPECT_EQ(parse_config(path).n_trials, 42);
  {
    std::ofstream f(path, std::ios::trunc);
  }
  EXPECT_EQ(parse_config(path), ScenarioConfig{});
  std::filesystem::remove(path);
  EXPECT_THROW(parse_config(dir / "ghostpeak_missing_config.ini"), std::runtime_error);
}
