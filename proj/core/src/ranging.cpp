// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/ranging.hpp"

#include <cmath>
#include <numbers>

#include "ghostpeak/rng.hpp"

namespace ghostpeak {

void DeviceClock::validate() const {
  if (!(tick_ps > 0.0) || !std::isfinite(tick_ps)) throw ConfigError("clock tick must be > 0");
  if (!(std::abs(ppm) < 1000.0)) throw ConfigError("|ppm| must be < 1000");
  if (!std::isfinite(offset_ps)) throw ConfigError("clock offset must be finite");
}

std::int64_t DeviceClock::ticks_at(double t_ps) const {
  return static_cast<std::int64_t>(std::floor(local_from_true(t_ps) / tick_ps));
}

std::int64_t DeviceClock::ticks_for(double duration_ps) const { return std::llround(duration_ps / tick_ps); }

const char* to_string(ExchangeStatus s) {
  switch (s) {
    case ExchangeStatus::ok: return "ok";
    case ExchangeStatus::packet_lost: return "packet-lost";
    case ExchangeStatus::no_detection: return "no-detection";
  }
  return "?";
}

double ss_twr_distance(double t_round_ps, double t_reply_ps) {
  if (t_round_ps < t_reply_ps) throw MeasurementError("t_round < t_reply");
  return kSpeedOfLight * (t_round_ps - t_reply_ps) * 1e-12 / 2.0;
}

namespace {
// a*b - c*d without the cancellation of the naive form (Kahan).
double diff_of_products(double a, double b, double c, double d) {
  const double w = c * d;
  const double e = std::fma(-c, d, w);
  const double f = std::fma(a, b, -w);
  return f + e;
}
}  // namespace

double ds_twr_distance_full(double t_round1, double t_reply1, double t_round2, double t_reply2) {
  const double den = t_round1 + t_round2 + t_reply1 + t_reply2;
  if (!(den > 0.0)) throw MeasurementError("nonpositive DS-TWR denominator");
  return kSpeedOfLight * 1e-12 * diff_of_products(t_round1, t_round2, t_reply1, t_reply2) / den;
}

double ds_twr_distance_simple(double t_round1, double t_reply1, double t_round2, double t_reply2) {
  return kSpeedOfLight * 1e-12 / 4.0 * ((t_round1 - t_reply1) + (t_round2 - t_reply2));
}

double predicted_reduction(AttackTarget target, double delta_ps) {
  if (delta_ps < 0.0) throw MeasurementError("delta must be >= 0");
  switch (target) {
    case AttackTarget::packet2: return meters_from_ps(delta_ps) / 2.0;
    case AttackTarget::packet3: return meters_from_ps(delta_ps) / 4.0;
    case AttackTarget::both: return predicted_reduction(delta_ps, delta_ps);
  }
  return 0.0;
}

double predicted_reduction(double delta2_ps, double delta3_ps) {
  return predicted_reduction(AttackTarget::packet2, delta2_ps) + predicted_reduction(AttackTarget::packet3, delta3_ps);
}

void ExchangeConfig::validate() const {
  initiator.clock.validate();
  responder.clock.validate();
  initiator_to_responder.validate();
  responder_to_initiator.validate();
  packet.validate();
  shape.validate();
  validate_sample_rate(sample_rate_hz);
  receiver.validate();
  if (!packet.sts) throw ConfigError("ranging packets need an STS");
  if (packet.preamble_repetitions < receiver.acquisition_symbols + 2)
    throw ConfigError("preamble too short for the acquisition window");
  if (!(reply1_ps > 0.0) || !(reply2_ps > 0.0) || !(reply3_ps > 0.0)) throw ConfigError("reply times must be > 0");
  if (!(start_ps >= 0.0)) throw ConfigError("start time must be >= 0");
  if (final_data_message && final_data_bits.empty()) throw ConfigError("final data message needs data bits");
  if (attack) {
    attack->validate();
    trigger_near_initiator.validate();
    trigger_near_responder.validate();
    attacker_receiver.validate();
  }
}

double RangingExchange::advance_ps(int index) const {
  const PacketRecord* p = packet(index);
  if (!p || !p->toa) return 0.0;
  return p->grid_arrival_ps - p->toa->toa_ps;
}

const PacketRecord* RangingExchange::packet(int index) const {
  for (const auto& p : packets)
    if (p.index == index) return &p;
  return nullptr;
}

std::uint64_t spec_digest(const HrpPacketSpec& spec) {
  // FNV-1a over the on-air description.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xFFU;
      h *= 0x100000001b3ULL;
    }
  };
  for (auto c : spec.preamble_code) feed(static_cast<std::uint8_t>(c), 1);
  feed(static_cast<std::uint64_t>(spec.preamble_repetitions), 4);
  for (auto c : spec.sfd) feed(static_cast<std::uint8_t>(c), 1);
  if (spec.sts) {
    for (auto b : spec.sts->key) feed(b, 1);
    for (auto b : spec.sts->upper96) feed(b, 1);
    feed(spec.sts->counter, 4);
    feed(static_cast<std::uint64_t>(spec.sts->length_bits), 4);
  }
  for (auto b : spec.data_bits) feed(b, 1);
  return h;
}

namespace {

constexpr std::int64_t kListenGuardSamples = 128;

struct Sim {
  const ExchangeConfig& cfg;
  std::uint64_t seed;
  double ts_ps;
  RangingExchange ex;
  std::vector<MediumEvent> at_initiator;
  std::vector<MediumEvent> at_responder;

  Sim(const ExchangeConfig& c, std::uint64_t s) : cfg(c), seed(s), ts_ps(1e12 / c.sample_rate_hz) {}

  std::int64_t rmarker_samples(const HrpPacketSpec& spec) const {
    return slot_sample(spec.rmarker_slot(), cfg.sample_rate_hz);
  }

  ChannelModel keyed(const ChannelModel& ch, std::uint64_t tag) const {
    ChannelModel c = ch;
    c.seed = mix_seed({ch.seed, seed, tag});
    return c;
  }

  // Emits a packet whose RMARKER leaves at rmarker_ps; returns the medium event.
  MediumEvent emit(const HrpPacketSpec& spec, double rmarker_ps, const ChannelModel& ch, std::uint16_t source,
                   bool attacker, int packet_index) {
    MediumEvent ev;
    PulseTrain train = pulse_train(spec, cfg.shape, cfg.sample_rate_hz);
    ev.emit_time_ps = rmarker_ps - static_cast<double>(rmarker_samples(spec)) * ts_ps;
    ev.channel = ch;
    ev.source_id = source;
    EmissionRecord rec;
    rec.source_id = source;
    rec.attacker = attacker;
    rec.packet_index = packet_index;
    rec.start_ps = ev.emit_time_ps;
    rec.rmarker_ps = rmarker_ps;
    rec.end_ps = ev.emit_time_ps + static_cast<double>(train.length) * ts_ps;
    rec.gains = spec.amplitudes;
    rec.digest = spec_digest(spec);
    ex.emissions.push_back(rec);
    ev.signal = std::move(train);
    return ev;
  }

  HrpPacketSpec packet_spec(int index) const {
    HrpPacketSpec s = cfg.packet;
    s.sts->counter = cfg.packet.sts->counter + static_cast<std::uint32_t>(index - 1);
    return s;
  }

  // Grid time at which the RMARKER sample of an emission lands through the LoS tap.
  double grid_arrival(const MediumEvent& ev, const HrpPacketSpec& spec, const ChannelModel& ch) const {
    const std::int64_t start = std::llround(ev.emit_time_ps / ts_ps);
    const std::int64_t d = std::llround(ch.taps.front().delay_ps / ts_ps);
    return static_cast<double>(start + d + rmarker_samples(spec)) * ts_ps;
  }

  PacketRecord transmit(int index, const HrpPacketSpec& spec, double rmarker_ps, const DeviceConfig& tx,
                        const DeviceConfig& rx, const ChannelModel& link, std::vector<MediumEvent>& medium,
                        bool use_sts) {
    const ChannelModel ch = keyed(link, static_cast<std::uint64_t>(index));
    MediumEvent ev = emit(spec, rmarker_ps, ch, tx.id, false, index);
    PacketRecord rec;
    rec.index = index;
    rec.tx_id = tx.id;
    rec.rx_id = rx.id;
    rec.emit_ps = rmarker_ps;
    rec.arrival_ps = rmarker_ps + ch.taps.front().delay_ps;
    rec.grid_arrival_ps = grid_arrival(ev, spec, ch);
    const double listen = ev.emit_time_ps - static_cast<double>(kListenGuardSamples) * ts_ps;
    medium.push_back(std::move(ev));

    ReceptionPlan plan{&spec, cfg.shape, cfg.sample_rate_hz, listen, use_sts};
    const Reception r = receive_packet(medium, plan, cfg.receiver);
    rec.status = r.status;
    rec.toa = r.toa;
    if (r.status == ReceptionStatus::ok) rec.rx_ticks = rx.clock.ticks_at(r.toa->toa_ps);
    return rec;
  }

  void arm_attacker(const HrpPacketSpec& p1, const MediumEvent& legit1, std::uint16_t id, bool packet2) {
    AttackConfig ac = *cfg.attack;
    ac.targets = {packet2, !packet2};
    const ChannelModel trig = keyed(packet2 ? cfg.trigger_near_initiator : cfg.trigger_near_responder, 0x100U + id);
    MediumEvent ev = legit1;
    ev.channel = trig;
    std::vector<MediumEvent> medium{std::move(ev)};
    const double listen = legit1.emit_time_ps - static_cast<double>(kListenGuardSamples) * ts_ps;
    ReceptionPlan plan{&p1, cfg.shape, cfg.sample_rate_hz, listen, false};
    const Reception r = receive_packet(medium, plan, cfg.attacker_receiver);
    if (r.status != ReceptionStatus::ok) return;
    ex.triggers.push_back({id, r.toa->toa_ps});

    const OnAirProfile profile = observe_profile(p1);
    const auto plan_seed = mix_seed({seed, 0xA7AC0000ULL + id});
    SplitMix64 phase_rng(mix_seed({plan_seed, 1}));
    for (auto& e : reactive_schedule(r.toa->toa_ps, ac, profile, plan_seed)) {
      const double theta = 2.0 * std::numbers::pi * (static_cast<double>(phase_rng() >> 11) * 0x1.0p-53);
      const ChannelModel& base = packet2 ? ac.channel_to_initiator : ac.channel_to_responder;
      const ChannelModel ch = keyed(base, 0x200U + id).scaled(std::polar(1.0, theta));
      const int target_index = e.target == AttackTarget::packet2 ? 2 : 3;
      MediumEvent aev = emit(e.packet, e.rmarker_time_ps, ch, id, true, target_index);
      (packet2 ? at_initiator : at_responder).push_back(std::move(aev));
    }
  }

  void fail(ExchangeStatus s) { ex.status = s; }

  static ExchangeStatus status_for(ReceptionStatus r) {
    return r == ReceptionStatus::no_preamble || r == ReceptionStatus::data_error ? ExchangeStatus::packet_lost
                                                                                  : ExchangeStatus::no_detection;
  }

  RangingExchange run() {
    ex.mode = cfg.mode;
    const DeviceConfig& ini = cfg.initiator;
    const DeviceConfig& rsp = cfg.responder;

    // Packet 1: initiator -> responder.
    const HrpPacketSpec p1 = packet_spec(1);
    const std::int64_t tx1 = ini.clock.ticks_at(cfg.start_ps);
    const double t1 = ini.clock.true_from_local(static_cast<double>(tx1) * ini.clock.tick_ps);
    if (cfg.attack && cfg.attack->enabled) {
      const MediumEvent probe{PulseTrain(pulse_train(p1, cfg.shape, cfg.sample_rate_hz)), {},
                              t1 - static_cast<double>(rmarker_samples(p1)) * ts_ps, ini.id};
      if (cfg.attack->targets.packet2) arm_attacker(p1, probe, kAttackerNearInitiator, true);
      if (cfg.attack->targets.packet3 && cfg.mode == RangingMode::ds_twr)
        arm_attacker(p1, probe, kAttackerNearResponder, false);
    }
    PacketRecord r1 = transmit(1, p1, t1, ini, rsp, cfg.initiator_to_responder, at_responder, true);
    r1.tx_ticks = tx1;
    ex.packets.push_back(r1);
    if (r1.status != ReceptionStatus::ok) return fail(status_for(r1.status)), ex;

    // Packet 2: responder -> initiator.
    const HrpPacketSpec p2 = packet_spec(2);
    const std::int64_t tx2 = r1.rx_ticks + rsp.clock.ticks_for(cfg.reply1_ps);
    const double t2 = rsp.clock.true_from_local(static_cast<double>(tx2) * rsp.clock.tick_ps);
    PacketRecord r2 = transmit(2, p2, t2, rsp, ini, cfg.responder_to_initiator, at_initiator, true);
    r2.tx_ticks = tx2;
    ex.packets.push_back(r2);
    if (r2.status != ReceptionStatus::ok) return fail(status_for(r2.status)), ex;

    ex.t_round1 = static_cast<double>(r2.rx_ticks - tx1) * ini.clock.tick_ps;
    ex.t_reply1 = static_cast<double>(tx2 - r1.rx_ticks) * rsp.clock.tick_ps;
    if (cfg.mode == RangingMode::ss_twr) {
      if (ex.t_round1 < ex.t_reply1) return fail(ExchangeStatus::no_detection), ex;
      ex.distance_full = ex.distance_simple = ss_twr_distance(ex.t_round1, ex.t_reply1);
      return ex;
    }

    // Packet 3: initiator -> responder.
    const HrpPacketSpec p3 = packet_spec(3);
    const std::int64_t tx3 = r2.rx_ticks + ini.clock.ticks_for(cfg.reply2_ps);
    const double t3 = ini.clock.true_from_local(static_cast<double>(tx3) * ini.clock.tick_ps);
    PacketRecord r3 = transmit(3, p3, t3, ini, rsp, cfg.initiator_to_responder, at_responder, true);
    r3.tx_ticks = tx3;
    ex.packets.push_back(r3);
    if (r3.status != ReceptionStatus::ok) return fail(status_for(r3.status)), ex;

    ex.t_round2 = static_cast<double>(r3.rx_ticks - tx2) * rsp.clock.tick_ps;
    ex.t_reply2 = static_cast<double>(tx3 - r2.rx_ticks) * ini.clock.tick_ps;

    if (cfg.final_data_message) {
      HrpPacketSpec p4 = cfg.packet;
      p4.sts.reset();
      p4.data_bits = cfg.final_data_bits;
      const std::int64_t tx4 = tx3 + ini.clock.ticks_for(cfg.reply3_ps);
      const double t4 = ini.clock.true_from_local(static_cast<double>(tx4) * ini.clock.tick_ps);
      PacketRecord r4 = transmit(4, p4, t4, ini, rsp, cfg.initiator_to_responder, at_responder, false);
      r4.tx_ticks = tx4;
      ex.packets.push_back(r4);
      if (r4.status != ReceptionStatus::ok) return fail(ExchangeStatus::packet_lost), ex;
    }

    const double den = ex.t_round1 + ex.t_round2 + ex.t_reply1 + ex.t_reply2;
    ex.distance_full = den > 0.0 ? ds_twr_distance_full(ex.t_round1, ex.t_reply1, ex.t_round2, ex.t_reply2) : 0.0;
    ex.distance_simple = ds_twr_distance_simple(ex.t_round1, ex.t_reply1, ex.t_round2, ex.t_reply2);
    return ex;
  }
};

}  // namespace

RangingExchange run_exchange(const ExchangeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Sim sim(cfg, seed);
  return sim.run();
}

}  // namespace ghostpeak
