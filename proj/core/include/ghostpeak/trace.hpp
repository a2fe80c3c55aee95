// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace ghostpeak {

enum class RecordType : std::uint8_t { tx = 1, rx = 2, toa_decision = 3, exchange_summary = 4 };

const char* to_string(RecordType t);

struct TxFields {
  std::uint32_t exchange = 0;
  std::uint8_t packet_index = 0;
  std::uint8_t attacker = 0;
  std::uint64_t spec_digest = 0;
  std::array<double, 4> gains{};  // preamble, sfd, sts, data
  std::uint64_t lead_ps = 0;      // emission start precedes the timestamp by this much
  std::uint64_t duration_ps = 0;
  bool operator==(const TxFields&) const = default;
};

struct RxFields {
  std::uint32_t exchange = 0;
  std::uint8_t packet_index = 0;
  std::uint16_t source_id = 0;
  bool operator==(const RxFields&) const = default;
};

struct ToaFields {
  std::uint32_t exchange = 0;
  std::uint8_t packet_index = 0;
  std::uint8_t status = 0;  // ReceptionStatus
  std::int32_t peak_index = 0;
  std::int32_t accepted_index = 0;
  double peak_magnitude = 0.0;
  double noise_floor = 0.0;
  double sts_quality = 0.0;
  std::uint8_t leading_edge_used = 0;
  bool operator==(const ToaFields&) const = default;
};

struct SummaryFields {
  std::uint32_t exchange = 0;
  std::uint8_t status = 0;  // ExchangeStatus
  std::uint8_t targets = 0; // bit 0: packet2, bit 1: packet3
  std::uint8_t is_reduction = 0;
  double distance_full_m = 0.0;
  double distance_simple_m = 0.0;
  double measured_m = 0.0;
  double true_distance_m = 0.0;
  std::string note;
  bool operator==(const SummaryFields&) const = default;
};

using TracePayload = std::variant<TxFields, RxFields, ToaFields, SummaryFields>;

struct TraceRecord {
  RecordType type = RecordType::tx;
  std::uint64_t timestamp_ps = 0;
  std::uint16_t device_id = 0;
  TracePayload payload;
  bool operator==(const TraceRecord&) const = default;
};

inline constexpr char kTraceMagic[8] = {'G', 'P', 'K', 'T', 'R', 'A', 'C', 'E'};
inline constexpr std::uint16_t kTraceVersion = 1;

std::vector<std::uint8_t> encode_trace(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> decode_trace(const std::vector<std::uint8_t>& bytes);

void write_trace(const std::vector<TraceRecord>& records, const std::filesystem::path& path);
std::vector<TraceRecord> read_trace(const std::filesystem::path& path);

/// Human-readable rendering, grouped per exchange.
void dissect(const std::vector<TraceRecord>& records, std::ostream& os);
std::string dissect(const std::filesystem::path& path);

}  // namespace ghostpeak
