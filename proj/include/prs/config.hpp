// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a small INI dialect ([section] and key = value
// lines, '#' or ';' comments), the experiment description it fills in, and
// the named presets.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prs/channel.hpp"
#include "prs/predictor.hpp"
#include "prs/simulator.hpp"

namespace prs::config {

struct IniEntry {
  std::string value;
  int line = 0;
};

using IniSection = std::map<std::string, IniEntry>;
using IniDocument = std::map<std::string, IniSection>;

/// Throws std::runtime_error naming the line on malformed input or a
/// repeated key.
IniDocument parse_ini(std::istream& in, const std::string& source = "<config>");

/// "0:30:2" (inclusive range) or "1, 2.5, 4".
std::vector<double> parse_number_list(const std::string& text);
std::vector<std::string> parse_word_list(const std::string& text);

enum class ExperimentKind { Outage, Capacity };
enum class CsiMode { Synthetic, TimeSeries };

struct ExperimentConfig {
  std::string name = "custom";
  ExperimentKind kind = ExperimentKind::Outage;
  CsiMode csi_mode = CsiMode::Synthetic;
  std::vector<std::string> schemes{"ORS-perfect", "ORS", "OSTC", "PRS"};
  std::int64_t trials = 100000;
  std::uint64_t seed = 1;
  std::string output;
  unsigned workers = 0;

  sim::NetworkConfig network;
  std::vector<std::size_t> relay_counts{8};
  std::vector<sim::Relaying> relaying{sim::Relaying::Df};

  channel::FadingProcessConfig fading;
  std::vector<double> doppler_hz{100.0};
  std::size_t dataset_length = 1000000;

  /// Delay between measurement and use; gives rho_o = J0(2 pi f_d tau) and the
  /// prediction horizon D = tau f_s.
  std::vector<double> delays_ms{3.0};
  std::optional<double> rho_outdated;
  double rho_predicted = 0.95;
  sim::AfCorrelation af_correlation = sim::AfCorrelation::EndToEnd;
  std::string model_path;

  std::vector<double> snr_db{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};

  predictor::TrainConfig train;

  std::vector<double> pilot_snr_db;
  std::vector<double> max_phase_deg;

  std::size_t flops_links = 8;
  predictor::InputMode flops_mode = predictor::InputMode::Magnitude;
  double flops_rate_hz = 1000.0;
};

/// Applies every key of `doc` onto `cfg`. Unknown sections or keys and bad
/// values throw std::runtime_error naming the line.
void apply_ini(ExperimentConfig& cfg, const IniDocument& doc);

ExperimentConfig load_config_file(const std::string& path);

/// fig3b, fig4a, fig4b, fig6a, fig6b, fig7a, fig7b.
ExperimentConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Deterministic text form of every field that affects results.
std::string canonical(const ExperimentConfig& cfg);
/// FNV-1a 64 of canonical(cfg), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace prs::config
