// SPDX-License-Identifier: Apache-2.0
#include "ghostpeak/trace.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ghostpeak/ranging.hpp"
#include "ghostpeak/receiver.hpp"
#include "ghostpeak/types.hpp"

namespace ghostpeak {

const char* to_string(RecordType t) {
  switch (t) {
    case RecordType::tx: return "TX";
    case RecordType::rx: return "RX";
    case RecordType::toa_decision: return "TOA";
    case RecordType::exchange_summary: return "SUM";
  }
  return "?";
}

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  template <class T>
  void put(T v) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    const auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t pos, std::size_t end) : in_(in), pos_(pos), end_(end) {}
  template <class T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<decltype(u)>(static_cast<decltype(u)>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw TraceError("truncated record field", pos_);
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
  std::size_t end_;
};

RecordType type_of(const TracePayload& p) {
  switch (p.index()) {
    case 0: return RecordType::tx;
    case 1: return RecordType::rx;
    case 2: return RecordType::toa_decision;
    default: return RecordType::exchange_summary;
  }
}

void encode_payload(const TracePayload& p, std::vector<std::uint8_t>& out) {
  Writer w(out);
  if (const auto* t = std::get_if<TxFields>(&p)) {
    w.put(t->exchange);
    w.put(t->packet_index);
    w.put(t->attacker);
    w.put(t->spec_digest);
    for (double g : t->gains) w.put_f64(g);
    w.put(t->lead_ps);
    w.put(t->duration_ps);
  } else if (const auto* r = std::get_if<RxFields>(&p)) {
    w.put(r->exchange);
    w.put(r->packet_index);
    w.put(r->source_id);
  } else if (const auto* a = std::get_if<ToaFields>(&p)) {
    w.put(a->exchange);
    w.put(a->packet_index);
    w.put(a->status);
    w.put(a->peak_index);
    w.put(a->accepted_index);
    w.put_f64(a->peak_magnitude);
    w.put_f64(a->noise_floor);
    w.put_f64(a->sts_quality);
    w.put(a->leading_edge_used);
  } else {
    const auto& s = std::get<SummaryFields>(p);
    if (s.note.size() > 0xFFFF) throw std::length_error("summary note too long");
    w.put(s.exchange);
    w.put(s.status);
    w.put(s.targets);
    w.put(s.is_reduction);
    w.put_f64(s.distance_full_m);
    w.put_f64(s.distance_simple_m);
    w.put_f64(s.measured_m);
    w.put_f64(s.true_distance_m);
    w.put(static_cast<std::uint16_t>(s.note.size()));
    w.put_bytes(s.note);
  }
}

TracePayload decode_payload(RecordType type, Reader& r) {
  switch (type) {
    case RecordType::tx: {
      TxFields t;
      t.exchange = r.get<std::uint32_t>();
      t.packet_index = r.get<std::uint8_t>();
      t.attacker = r.get<std::uint8_t>();
      t.spec_digest = r.get<std::uint64_t>();
      for (double& g : t.gains) g = r.get_f64();
      t.lead_ps = r.get<std::uint64_t>();
      t.duration_ps = r.get<std::uint64_t>();
      return t;
    }
    case RecordType::rx: {
      RxFields x;
      x.exchange = r.get<std::uint32_t>();
      x.packet_index = r.get<std::uint8_t>();
      x.source_id = r.get<std::uint16_t>();
      return x;
    }
    case RecordType::toa_decision: {
      ToaFields a;
      a.exchange = r.get<std::uint32_t>();
      a.packet_index = r.get<std::uint8_t>();
      a.status = r.get<std::uint8_t>();
      a.peak_index = r.get<std::int32_t>();
      a.accepted_index = r.get<std::int32_t>();
      a.peak_magnitude = r.get_f64();
      a.noise_floor = r.get_f64();
      a.sts_quality = r.get_f64();
      a.leading_edge_used = r.get<std::uint8_t>();
      return a;
    }
    case RecordType::exchange_summary: {
      SummaryFields s;
      s.exchange = r.get<std::uint32_t>();
      s.status = r.get<std::uint8_t>();
      s.targets = r.get<std::uint8_t>();
      s.is_reduction = r.get<std::uint8_t>();
      s.distance_full_m = r.get_f64();
      s.distance_simple_m = r.get_f64();
      s.measured_m = r.get_f64();
      s.true_distance_m = r.get_f64();
      const auto n = r.get<std::uint16_t>();
      s.note = r.get_bytes(n);
      return s;
    }
  }
  throw TraceError("unknown record type", r.pos());
}

}  // namespace

std::vector<std::uint8_t> encode_trace(const std::vector<TraceRecord>& records) {
  std::vector<std::uint8_t> out(std::begin(kTraceMagic), std::end(kTraceMagic));
  Writer w(out);
  w.put(kTraceVersion);
  std::vector<std::uint8_t> payload;
  for (const auto& rec : records) {
    if (type_of(rec.payload) != rec.type) throw std::invalid_argument("record type does not match payload");
    payload.clear();
    encode_payload(rec.payload, payload);
    w.put(static_cast<std::uint8_t>(rec.type));
    w.put(rec.timestamp_ps);
    w.put(rec.device_id);
    w.put(static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
  }
  return out;
}

std::vector<TraceRecord> decode_trace(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw TraceError("truncated header", bytes.size());
  if (std::memcmp(bytes.data(), kTraceMagic, 8) != 0) throw TraceError("bad magic", 0);
  Reader hdr(bytes, 8, bytes.size());
  const auto version = hdr.get<std::uint16_t>();
  if (version != kTraceVersion) throw TraceError("unsupported version " + std::to_string(version), 8);

  std::vector<TraceRecord> out;
  std::size_t pos = 10;
  while (pos < bytes.size()) {
    const std::size_t rec_start = pos;
    Reader r(bytes, pos, bytes.size());
    TraceRecord rec;
    const auto t = r.get<std::uint8_t>();
    if (t < 1 || t > 4) throw TraceError("unknown record type " + std::to_string(t), rec_start);
    rec.type = static_cast<RecordType>(t);
    rec.timestamp_ps = r.get<std::uint64_t>();
    rec.device_id = r.get<std::uint16_t>();
    const std::size_t len_pos = r.pos();
    const auto len = r.get<std::uint32_t>();
    const std::size_t body = r.pos();
    if (body + len > bytes.size()) throw TraceError("length prefix exceeds file size", len_pos);
    Reader pr(bytes, body, body + len);
    rec.payload = decode_payload(rec.type, pr);
    if (pr.pos() != body + len) throw TraceError("length prefix does not match payload", len_pos);
    out.push_back(std::move(rec));
    pos = body + len;
  }
  return out;
}

void write_trace(const std::vector<TraceRecord>& records, const std::filesystem::path& path) {
  const auto bytes = encode_trace(records);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open trace for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing trace: " + path.string());
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trace: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_trace(bytes);
}

namespace {

std::uint32_t exchange_of(const TracePayload& p) {
  return std::visit([](const auto& f) { return f.exchange; }, p);
}

const char* reception_name(std::uint8_t s) {
  return s <= static_cast<std::uint8_t>(ReceptionStatus::data_error) ? to_string(static_cast<ReceptionStatus>(s)) : "?";
}

const char* exchange_name(std::uint8_t s) {
  return s <= static_cast<std::uint8_t>(ExchangeStatus::no_detection) ? to_string(static_cast<ExchangeStatus>(s)) : "?";
}

std::string target_names(std::uint8_t t) {
  if ((t & 3) == 3) return "packet2+packet3";
  if (t & 1) return "packet2";
  if (t & 2) return "packet3";
  return "none";
}

}  // namespace

void dissect(const std::vector<TraceRecord>& records, std::ostream& os) {
  os << fmt::format("GPKTRACE v{} records={}\n", kTraceVersion, records.size());
  std::vector<std::uint32_t> order;
  std::map<std::uint32_t, std::vector<const TraceRecord*>> groups;
  for (const auto& r : records) {
    const auto ex = exchange_of(r.payload);
    auto [it, fresh] = groups.try_emplace(ex);
    if (fresh) order.push_back(ex);
    it->second.push_back(&r);
  }
  for (auto ex : order) {
    const auto& recs = groups[ex];
    struct Span {
      std::uint64_t begin, end;
      int packet;
    };
    std::vector<Span> legit;
    bool le_used = false;
    for (const auto* r : recs) {
      if (const auto* t = std::get_if<TxFields>(&r->payload); t && !t->attacker) {
        const std::uint64_t b = r->timestamp_ps - std::min(r->timestamp_ps, t->lead_ps);
        legit.push_back({b, b + t->duration_ps, t->packet_index});
      }
      if (const auto* a = std::get_if<ToaFields>(&r->payload); a && a->leading_edge_used) le_used = true;
    }
    os << fmt::format("exchange {}\n", ex);
    for (const auto* r : recs) {
      std::string line = fmt::format("  t={:>16} ps dev=0x{:04x} {:<3} ", r->timestamp_ps, r->device_id, to_string(r->type));
      if (const auto* t = std::get_if<TxFields>(&r->payload)) {
        line += fmt::format("pkt={} {} digest={:016x} gains={:.3f}/{:.3f}/{:.3f}/{:.3f} lead={} dur={}", t->packet_index,
                            t->attacker ? "attacker" : "legit", t->spec_digest, t->gains[0], t->gains[1], t->gains[2],
                            t->gains[3], t->lead_ps, t->duration_ps);
        if (t->attacker) {
          const std::uint64_t b = r->timestamp_ps - std::min(r->timestamp_ps, t->lead_ps);
          const std::uint64_t e = b + t->duration_ps;
          for (const auto& s : legit)
            if (b < s.end && s.begin < e) line += fmt::format(" [OVERLAP legit pkt={}]", s.packet);
        }
      } else if (const auto* x = std::get_if<RxFields>(&r->payload)) {
        line += fmt::format("pkt={} from=0x{:04x}", x->packet_index, x->source_id);
      } else if (const auto* a = std::get_if<ToaFields>(&r->payload)) {
        line += fmt::format("pkt={} status={} peak={} accepted={} leading_edge={} mag={:.4g} floor={:.4g} quality={:.3f}",
                            a->packet_index, reception_name(a->status), a->peak_index, a->accepted_index,
                            a->leading_edge_used ? "yes" : "no", a->peak_magnitude, a->noise_floor, a->sts_quality);
      } else {
        const auto& s = std::get<SummaryFields>(r->payload);
        line += fmt::format("status={} targets={} measured={:.4f} m true={:.4f} m full={:.4f} simple={:.4f} reduced={}",
                            exchange_name(s.status), target_names(s.targets), s.measured_m, s.true_distance_m,
                            s.distance_full_m, s.distance_simple_m, s.is_reduction ? "yes" : "no");
        if (!s.note.empty()) line += " note=\"" + s.note + "\"";
        if (le_used && s.is_reduction && s.measured_m < s.true_distance_m) line += " [GHOST PEAK]";
      }
      os << line << '\n';
    }
  }
}

std::string dissect(const std::filesystem::path& path) {
  std::ostringstream os;
  dissect(read_trace(path), os);
  return os.str();
}

}  // namespace ghostpeak
