// SPDX-License-Identifier: Apache-2.0

#include "prs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prs::selection {

RateConfig::RateConfig(double target_rate) : rate_(target_rate) {
  if (!(target_rate > 0.0)) throw std::invalid_argument("target rate must be positive");
}

double RateConfig::threshold() const { return std::exp2(2.0 * rate_) - 1.0; }

double RateConfig::direct_threshold() const { return std::exp2(rate_) - 1.0; }

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Ors: return "ORS";
    case Scheme::Prs: return "PRS";
    case Scheme::Ostc: return "OSTC";
    case Scheme::Direct: return "DT";
  }
  return "?";
}

std::vector<RelayId> decoding_subset(std::span<const double> sr_snrs, const RateConfig& rate) {
  const double gamma_o = rate.threshold();
  std::vector<RelayId> ds;
  for (std::size_t i = 0; i < sr_snrs.size(); ++i) {
    if (sr_snrs[i] >= gamma_o) ds.push_back(static_cast<RelayId>(i + 1));
  }
  return ds;
}

namespace {

double metric_of(std::span<const double> metric, RelayId id) {
  if (id < 1 || static_cast<std::size_t>(id) > metric.size()) {
    throw std::out_of_range("relay id has no metric");
  }
  return metric[static_cast<std::size_t>(id - 1)];
}

}  // namespace

std::optional<RelayId> select_best_df(std::span<const RelayId> ds, std::span<const double> metric) {
  std::optional<RelayId> best;
  double best_value = 0.0;
  for (RelayId id : ds) {
    const double v = metric_of(metric, id);
    if (!best || v > best_value || (v == best_value && id < *best)) {
      best = id;
      best_value = v;
    }
  }
  return best;
}

OstcSelection select_ostc_pair(std::span<const RelayId> ds, std::span<const double> metric) {
  OstcSelection pair;
  pair.first = select_best_df(ds, metric);
  if (!pair.first) return pair;
  std::optional<RelayId> second;
  double second_value = 0.0;
  for (RelayId id : ds) {
    if (id == *pair.first) continue;
    const double v = metric_of(metric, id);
    if (!second || v > second_value || (v == second_value && id < *second)) {
      second = id;
      second_value = v;
    }
  }
  pair.second = second;
  return pair;
}

double af_effective_snr(double gamma_sk, double gamma_kd, bool use_bound) {
  if (use_bound) return std::min(gamma_sk, gamma_kd);
  return gamma_sk * gamma_kd / (gamma_sk + gamma_kd + 1.0);
}

RelayId select_best_af(std::span<const RelayObservation> observations, bool use_predicted) {
  if (observations.empty()) throw std::invalid_argument("select_best_af: no relays");
  RelayId best = 0;
  double best_value = 0.0;
  for (const auto& obs : observations) {
    const double v = use_predicted ? std::min(obs.sr_metric.value, obs.rd_metric.value)
                                   : std::min(obs.sr_actual.value, obs.rd_actual.value);
    if (best == 0 || v > best_value || (v == best_value && obs.relay_id < best)) {
      best = obs.relay_id;
      best_value = v;
    }
  }
  return best;
}

double ostc_effective_snr(double gamma_1, double gamma_2) { return 0.5 * (gamma_1 + gamma_2); }

bool direct_transmission_outcome(double gamma_sd, const RateConfig& rate) {
  return gamma_sd < rate.direct_threshold();
}

double half_duplex_rate(double snr) { return 0.5 * std::log2(1.0 + snr); }

bool half_duplex_outage(double snr, const RateConfig& rate) { return snr < rate.threshold(); }

}  // namespace prs::selection
