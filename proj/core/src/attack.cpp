// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/attack.hpp"

#include <cmath>
#include <boost/algorithm/string.hpp>
#include <boost/random/normal_distribution.hpp>

#include "ghostpeak/rng.hpp"

namespace ghostpeak {

const char* to_string(AttackTarget t) {
  switch (t) {
    case AttackTarget::packet2: return "packet2";
    case AttackTarget::packet3: return "packet3";
    case AttackTarget::both: return "both";
  }
  return "?";
}

std::string to_string(TargetSet t) {
  if (t.packet2 && t.packet3) return "packet2+packet3";
  if (t.packet2) return "packet2";
  if (t.packet3) return "packet3";
  return "none";
}

TargetSet parse_targets(const std::string& s) {
  TargetSet t;
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of("+, "), boost::token_compress_on);
  for (auto p : parts) {
    boost::trim(p);
    if (p.empty() || p == "none") continue;
    if (p == "packet2") t.packet2 = true;
    else if (p == "packet3") t.packet3 = true;
    else if (p == "both") t.packet2 = t.packet3 = true;
    else throw ConfigError("unknown attack target '" + p + "'");
  }
  return t;
}

void AttackConfig::validate() const {
  for (double g : {preamble_gain, sfd_gain, sts_gain})
    if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("attack gains must be finite and >= 0");
  if (!(timing_jitter_sigma_ps >= 0.0)) throw ConfigError("timing jitter must be >= 0");
  if (!(delay_packet2_ps >= 0.0) || !(delay_packet3_ps >= 0.0)) throw ConfigError("attack delays must be >= 0");
  channel_to_initiator.validate();
  channel_to_responder.validate();
}

double AttackConfig::delay_for(AttackTarget t) const {
  return t == AttackTarget::packet3 ? delay_packet3_ps : delay_packet2_ps;
}

OnAirProfile observe_profile(const HrpPacketSpec& on_air) {
  OnAirProfile p;
  p.preamble_code = on_air.preamble_code;
  p.preamble_repetitions = on_air.preamble_repetitions;
  p.sfd = on_air.sfd;
  p.sts_length_bits = on_air.sts ? on_air.sts->length_bits : 0;
  return p;
}

HrpPacketSpec craft_attack_packet(const AttackConfig& cfg, const OnAirProfile& victim, std::uint64_t nonce) {
  if (victim.sts_length_bits <= 0) throw ConfigError("victim packet has no STS to overshadow");
  HrpPacketSpec s;
  s.preamble_code = victim.preamble_code;
  s.preamble_repetitions = victim.preamble_repetitions;
  s.sfd = victim.sfd;
  StsConfig sts;
  SplitMix64 g(mix_seed({cfg.sts_seed, nonce}));
  for (auto& b : sts.key) b = static_cast<std::uint8_t>(g());
  for (auto& b : sts.upper96) b = static_cast<std::uint8_t>(g());
  sts.counter = static_cast<std::uint32_t>(g());
  sts.length_bits = victim.sts_length_bits;
  s.sts = sts;
  s.amplitudes = {cfg.preamble_gain, cfg.sfd_gain, cfg.sts_gain, 0.0};
  return s;
}

HrpPacketSpec craft_attack_packet(const AttackConfig& cfg, const HrpPacketSpec& victim_spec, std::uint64_t nonce) {
  return craft_attack_packet(cfg, observe_profile(victim_spec), nonce);
}

std::vector<ScheduledEmission> reactive_schedule(double trigger_toa_ps, const AttackConfig& cfg,
                                                 const OnAirProfile& victim, std::uint64_t rng_seed) {
  cfg.validate();
  std::vector<ScheduledEmission> out;
  if (!cfg.enabled) return out;
  SplitMix64 g(rng_seed);
  boost::random::normal_distribution<double> jitter(0.0, 1.0);
  for (AttackTarget t : {AttackTarget::packet2, AttackTarget::packet3}) {
    if ((t == AttackTarget::packet2 && !cfg.targets.packet2) || (t == AttackTarget::packet3 && !cfg.targets.packet3))
      continue;
    ScheduledEmission e;
    e.target = t;
    e.rmarker_time_ps = trigger_toa_ps + cfg.delay_for(t) + cfg.timing_jitter_sigma_ps * jitter(g);
    e.packet = craft_attack_packet(cfg, victim, mix_seed({rng_seed, static_cast<std::uint64_t>(t)}));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ghostpeak
