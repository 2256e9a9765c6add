// SPDX-License-Identifier: Apache-2.0
//
// Relay-selection rules (ORS, PRS, OSTC, direct transmission) and the
// per-frame DF/AF decision model. Relay ids are 1-based.

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace prs::selection {

using RelayId = int;

/// SNR a link actually delivers at transmission time. Only these decide outage.
struct ActualSnr {
  double value = 0.0;
};

/// SNR used to rank relays (outdated, predicted or perfect). Never decides outage.
struct MetricSnr {
  double value = 0.0;
};

struct RelayObservation {
  RelayId relay_id = 1;
  ActualSnr sr_actual;
  ActualSnr rd_actual;
  MetricSnr sr_metric;
  MetricSnr rd_metric;
};

/// Target rate R in bits/s/Hz. The threshold is always derived from R.
class RateConfig {
 public:
  explicit RateConfig(double target_rate);
  double target_rate() const { return rate_; }
  /// Half-duplex threshold 2^{2R} - 1.
  double threshold() const;
  /// Full-duplex (direct link) threshold 2^R - 1.
  double direct_threshold() const;

 private:
  double rate_;
};

enum class Scheme { Ors, Prs, Ostc, Direct };
std::string_view to_string(Scheme scheme);

struct SelectionOutcome {
  Scheme scheme = Scheme::Prs;
  std::vector<RelayId> chosen;
  double end_to_end_snr_actual = 0.0;
  bool outage = true;
  double realized_rate = 0.0;
};

struct OstcSelection {
  std::optional<RelayId> first;
  std::optional<RelayId> second;
};

/// Relays whose source-hop SNR reaches the threshold, ascending id.
std::vector<RelayId> decoding_subset(std::span<const double> sr_snrs, const RateConfig& rate);

/// Argmax of metric over ds; metric is indexed by relay id - 1. Ties go to
/// the lowest id.
std::optional<RelayId> select_best_df(std::span<const RelayId> ds, std::span<const double> metric);

/// Top two of ds by metric. A single-member ds yields only `first`.
OstcSelection select_ostc_pair(std::span<const RelayId> ds, std::span<const double> metric);

/// Exact g1 g2 / (g1 + g2 + 1) or the upper bound min(g1, g2).
double af_effective_snr(double gamma_sk, double gamma_kd, bool use_bound);

/// Argmax over relays of min(sr, rd), using metric SNRs when use_predicted
/// is set and actual SNRs otherwise. Throws on an empty list.
RelayId select_best_af(std::span<const RelayObservation> observations, bool use_predicted);

/// Alamouti pair with the relay power split evenly: (g1 + g2) / 2.
double ostc_effective_snr(double gamma_1, double gamma_2);

/// Outage of direct transmission at full power over the whole frame:
/// log2(1 + g_sd) < R.
bool direct_transmission_outcome(double gamma_sd, const RateConfig& rate);

/// 0.5 log2(1 + snr).
double half_duplex_rate(double snr);

/// Outage of a two-phase link: 0.5 log2(1 + snr) < R.
bool half_duplex_outage(double snr, const RateConfig& rate);

}  // namespace prs::selection
