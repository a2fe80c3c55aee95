// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ghostpeak/channel.hpp"
#include "ghostpeak/phy.hpp"

namespace ghostpeak {

struct Cir {
  std::vector<Complex> values;
  double lag0_time_ps = 0.0;
  double sample_rate_hz = kDefaultSampleRateHz;

  double lag_time_ps(double lag) const { return lag0_time_ps + lag * 1e12 / sample_rate_hz; }
};

enum class NoiseEstimator { median_abs, trimmed_mean };

struct StsBitCheck {
  int max_bit_errors = 0;
  bool operator==(const StsBitCheck&) const = default;
};

struct ReceiverConfig {
  int backsearch_window = 16;
  double detect_threshold_db = 20.0;
  double leading_edge_threshold_db = 12.0;
  double leading_edge_rel_max_db = 20.0;
  NoiseEstimator noise_estimator = NoiseEstimator::median_abs;
  std::optional<StsBitCheck> sts_bit_check;
  // An early lag is only taken if it is a local maximum of |CIR|; keeps the
  // rising edge of the main pulse from being read as a separate path.
  bool require_local_max = true;
  // Normalized correlation required at the strongest STS peak.
  double min_sts_quality = 0.3;
  int acquisition_symbols = 2;
  int acquisition_lags = 1024;
  int sts_search_half_width = 64;

  void validate() const;
  bool operator==(const ReceiverConfig&) const = default;
};

struct ToaEstimate {
  double toa_ps = 0.0;
  int peak_index = 0;
  int accepted_index = 0;
  double peak_magnitude = 0.0;
  double noise_floor = 0.0;
  bool leading_edge_used = false;
  double sts_quality = 0.0;
};

Cir compute_cir(const BasebandSignal& received, const BasebandSignal& tmpl);
/// Same values as compute_cir(received, tmpl.render()) for lags [lag_begin, lag_end),
/// evaluated through the pulse-matched filter.
Cir compute_cir(const BasebandSignal& received, const PulseTrain& tmpl, int lag_begin, int lag_end);

double estimate_noise_floor(const Cir& cir, const ReceiverConfig& cfg);
std::optional<ToaEstimate> detect_toa(const Cir& cir, const ReceiverConfig& cfg);

/// |CIR at the accepted lag| / sqrt(E_template * E_received over the template support), in [0,1].
/// Returns 0 when the optional bit check fails.
double sts_quality(const BasebandSignal& received, const BasebandSignal& tmpl, const ToaEstimate& toa,
                   const ReceiverConfig& cfg);
double sts_quality(const BasebandSignal& received, const PulseTrain& tmpl, int lag,
                   const ReceiverConfig& cfg);
/// Sign errors of the per-pulse demodulation at the given lag.
int sts_bit_errors(const BasebandSignal& received, const PulseTrain& tmpl, int lag);

enum class ReceptionStatus { ok, no_preamble, no_sts_peak, low_quality, bit_check_failed, data_error };

const char* to_string(ReceptionStatus s);

/// What the receiver expects and when it starts listening.
struct ReceptionPlan {
  const HrpPacketSpec* spec = nullptr;
  PulseShape shape;
  double sample_rate_hz = kDefaultSampleRateHz;
  double listen_ps = 0.0;
  bool use_sts = true;
};

struct Reception {
  ReceptionStatus status = ReceptionStatus::no_preamble;
  std::optional<ToaEstimate> toa;  // RMARKER arrival estimate
  double preamble_start_ps = 0.0;
  double main_peak_quality = 0.0;
};

Reception receive_packet(std::span<const MediumEvent> medium, const ReceptionPlan& plan,
                         const ReceiverConfig& cfg);

}  // namespace ghostpeak
