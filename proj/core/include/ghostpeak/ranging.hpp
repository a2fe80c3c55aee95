// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ghostpeak/attack.hpp"
#include "ghostpeak/channel.hpp"
#include "ghostpeak/phy.hpp"
#include "ghostpeak/receiver.hpp"

namespace ghostpeak {

struct DeviceClock {
  double offset_ps = 0.0;
  double ppm = 0.0;
  double tick_ps = kDefaultTickPs;

  void validate() const;
  double local_from_true(double t_ps) const { return offset_ps + t_ps * (1.0 + ppm * 1e-6); }
  double true_from_local(double l_ps) const { return (l_ps - offset_ps) / (1.0 + ppm * 1e-6); }
  /// Timestamp counter value when the given true instant is captured (floor to tick).
  std::int64_t ticks_at(double t_ps) const;
  /// Local duration expressed in ticks, rounded to the nearest tick.
  std::int64_t ticks_for(double duration_ps) const;
};

enum class RangingMode { ss_twr, ds_twr };
enum class ExchangeStatus { ok, packet_lost, no_detection };

const char* to_string(ExchangeStatus s);

double ss_twr_distance(double t_round_ps, double t_reply_ps);
double ds_twr_distance_full(double t_round1, double t_reply1, double t_round2, double t_reply2);
double ds_twr_distance_simple(double t_round1, double t_reply1, double t_round2, double t_reply2);

double predicted_reduction(AttackTarget target, double delta_ps);
double predicted_reduction(double delta2_ps, double delta3_ps);

struct DeviceConfig {
  std::uint16_t id = 0;
  DeviceClock clock;
};

inline constexpr std::uint16_t kAttackerNearInitiator = 0x10;
inline constexpr std::uint16_t kAttackerNearResponder = 0x11;

struct ExchangeConfig {
  RangingMode mode = RangingMode::ds_twr;
  DeviceConfig initiator{1, {}};
  DeviceConfig responder{2, {}};
  ChannelModel initiator_to_responder;
  ChannelModel responder_to_initiator;
  // Packet 1 layout; packet k uses STS counter + k.
  HrpPacketSpec packet;
  PulseShape shape;
  double sample_rate_hz = kDefaultSampleRateHz;
  ReceiverConfig receiver;
  double reply1_ps = 1e9;
  double reply2_ps = 1e9;
  // True time at which the initiator intends to emit packet 1's RMARKER.
  double start_ps = 1e6;
  bool final_data_message = false;
  double reply3_ps = 1e9;
  std::vector<std::uint8_t> final_data_bits;

  std::optional<AttackConfig> attack;
  // Initiator -> attacker links used by each attacker's trigger receiver.
  ChannelModel trigger_near_initiator;
  ChannelModel trigger_near_responder;
  ReceiverConfig attacker_receiver;

  void validate() const;
};

struct PacketRecord {
  int index = 0;  // 1-based position in the exchange
  std::uint16_t tx_id = 0;
  std::uint16_t rx_id = 0;
  double emit_ps = 0.0;          // true RMARKER emission time
  double arrival_ps = 0.0;       // true (continuous) RMARKER arrival
  double grid_arrival_ps = 0.0;  // arrival of the RMARKER sample on the simulation grid
  ReceptionStatus status = ReceptionStatus::no_preamble;
  std::optional<ToaEstimate> toa;
  std::int64_t tx_ticks = 0;
  std::int64_t rx_ticks = 0;
};

struct EmissionRecord {
  std::uint16_t source_id = 0;
  bool attacker = false;
  int packet_index = 0;  // legit: 1..4; attacker: targeted packet index
  double start_ps = 0.0;
  double rmarker_ps = 0.0;
  double end_ps = 0.0;
  FieldAmplitudes gains;
  std::uint64_t digest = 0;
};

struct RangingExchange {
  RangingMode mode = RangingMode::ds_twr;
  ExchangeStatus status = ExchangeStatus::ok;
  double t_round1 = 0.0;
  double t_reply1 = 0.0;
  double t_round2 = 0.0;
  double t_reply2 = 0.0;
  double distance_full = 0.0;
  double distance_simple = 0.0;
  std::vector<PacketRecord> packets;
  std::vector<EmissionRecord> emissions;
  struct Trigger {
    std::uint16_t attacker_id = 0;
    double toa_ps = 0.0;
  };
  std::vector<Trigger> triggers;

  /// grid arrival minus ToA of packet k, 0 when missing.
  double advance_ps(int index) const;
  const PacketRecord* packet(int index) const;
};

std::uint64_t spec_digest(const HrpPacketSpec& spec);

RangingExchange run_exchange(const ExchangeConfig& cfg, std::uint64_t seed);

}  // namespace ghostpeak
