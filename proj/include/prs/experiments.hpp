// SPDX-License-Identifier: Apache-2.0
//
// Experiment runners behind the command-line tool: outage and capacity
// sweeps, predictor evaluation, dataset generation and the FLOPS table.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prs/config.hpp"
#include "prs/predictor.hpp"

namespace prs::experiments {

struct ResultRow {
  std::string scheme;
  std::size_t relays = 0;
  std::string rho_mode;
  double snr_db = 0.0;
  double outage = 0.0;
  double std_err = 0.0;
  double rate = 0.0;
  double collision_rate = 0.0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> analytic;
  double rate_std_err = 0.0;
  std::string relaying;
  std::string variant;
  std::string config_hash;
};

std::string csv_header();
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Optional progress sink; one line per finished cell.
using Log = std::ostream*;

/// Outage or capacity sweep over every (relaying, K, Doppler, delay,
/// impairment variant) cell of `cfg`.
std::vector<ResultRow> run_sweep(const config::ExperimentConfig& cfg, Log log = nullptr);

/// Closed-form value reported next to a Monte-Carlo row, if one applies.
std::optional<double> analytic_value(const config::ExperimentConfig& cfg, const std::string& scheme,
                                     sim::Relaying relaying, std::size_t relays, double rho_predicted,
                                     double snr_db);

/// Prediction horizon in samples for a delay in milliseconds.
std::size_t horizon_samples(double delay_ms, double sample_rate_hz);

struct PredictEvalRow {
  double doppler_hz = 0.0;
  double delay_ms = 0.0;
  std::size_t horizon = 0;
  double rho_outdated = 0.0;
  double rho_outdated_empirical = 0.0;
  double rho_predicted = 0.0;
  double magnitude_corr = 0.0;
  double validation_mse = 0.0;
};

/// Trains one predictor per (Doppler, delay) and compares it with outdated CSI.
std::vector<PredictEvalRow> run_predict_eval(const config::ExperimentConfig& cfg, Log log = nullptr);
void write_predict_eval_csv(std::ostream& out, const std::vector<PredictEvalRow>& rows, const std::string& hash);

struct FlopsRow {
  std::string kind;
  std::uint64_t exact = 0;
  std::uint64_t simplified = 0;
  double flops_per_second = 0.0;
};

std::vector<FlopsRow> flops_table(const config::ExperimentConfig& cfg);
void write_flops_csv(std::ostream& out, const std::vector<FlopsRow>& rows);

/// Series of `links` links at the first configured Doppler, written as
/// link_<k>.csv under `dir`. Returns the written paths.
std::vector<std::string> generate_dataset(const config::ExperimentConfig& cfg, std::size_t links,
                                          const std::string& dir);

/// Trains on one link series (the model is shared by all links).
predictor::PredictorModel train_on_series(const channel::GainSeries& series, const predictor::TrainConfig& train,
                                          predictor::TrainReport* report);

/// Training series for a Doppler, drawn from a stream separate from the
/// simulation links.
channel::GainSeries training_series(const config::ExperimentConfig& cfg, double doppler_hz, std::size_t length);

}  // namespace prs::experiments
