// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ghostpeak/channel.hpp"
#include "ghostpeak/phy.hpp"

namespace ghostpeak {

enum class AttackTarget { packet2, packet3, both };

const char* to_string(AttackTarget t);

struct TargetSet {
  bool packet2 = false;
  bool packet3 = false;

  bool any() const { return packet2 || packet3; }
  bool operator==(const TargetSet&) const = default;
};

std::string to_string(TargetSet t);
TargetSet parse_targets(const std::string& s);

struct AttackConfig {
  bool enabled = false;
  TargetSet targets;
  // Measured from the attacker's own RMARKER estimate of packet 1.
  double delay_packet2_ps = 1e9;
  double delay_packet3_ps = 2e9;
  double timing_jitter_sigma_ps = 1e6;
  // Linear gains relative to the legitimate signal amplitude at the victim.
  double preamble_gain = 0.25;
  double sfd_gain = 0.25;
  double sts_gain = 1.0;
  std::uint64_t sts_seed = 0x6768'6f73'7421ULL;
  ChannelModel channel_to_initiator;
  ChannelModel channel_to_responder;

  void validate() const;
  double delay_for(AttackTarget t) const;
  bool operator==(const AttackConfig&) const = default;
};

/// What an outside observer learns from the air: code, SFD and field lengths. No key material.
struct OnAirProfile {
  std::vector<std::int8_t> preamble_code;
  int preamble_repetitions = 0;
  std::vector<std::int8_t> sfd;
  int sts_length_bits = 0;

  bool operator==(const OnAirProfile&) const = default;
};

OnAirProfile observe_profile(const HrpPacketSpec& on_air);

/// Weak preamble/SFD copy plus a random STS of the victim's length; no data field.
/// nonce distinguishes emissions that share one sts_seed.
HrpPacketSpec craft_attack_packet(const AttackConfig& cfg, const OnAirProfile& victim,
                                  std::uint64_t nonce = 0);
HrpPacketSpec craft_attack_packet(const AttackConfig& cfg, const HrpPacketSpec& victim_spec,
                                  std::uint64_t nonce = 0);

struct ScheduledEmission {
  AttackTarget target = AttackTarget::packet2;
  double rmarker_time_ps = 0.0;  // when the attack packet's RMARKER leaves the antenna
  HrpPacketSpec packet;
};

/// One emission per configured target; jitter drawn from rng_seed.
std::vector<ScheduledEmission> reactive_schedule(double trigger_toa_ps, const AttackConfig& cfg,
                                                 const OnAirProfile& victim, std::uint64_t rng_seed);

}  // namespace ghostpeak
