// SPDX-License-Identifier: Apache-2.0

#include "prs/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace prs::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const std::string t = trim(text);
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("'{}' is not a number", t));
  }
  if (used != t.size()) throw std::invalid_argument(fmt::format("'{}' is not a number", t));
  return v;
}

std::int64_t parse_int(const std::string& text) {
  const double v = parse_double(text);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw std::invalid_argument(fmt::format("'{}' is not an integer", text));
  return static_cast<std::int64_t>(v);
}

std::size_t parse_count(const std::string& text) {
  const auto v = parse_int(text);
  if (v < 0) throw std::invalid_argument(fmt::format("'{}' must be nonnegative", text));
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text) {
  const auto t = lower(trim(text));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw std::invalid_argument(fmt::format("'{}' is not a boolean", text));
}

sim::Relaying parse_relaying(const std::string& t) {
  const auto v = lower(trim(t));
  if (v == "df") return sim::Relaying::Df;
  if (v == "af") return sim::Relaying::Af;
  throw std::invalid_argument(fmt::format("relaying must be df or af, got '{}'", t));
}

std::string relaying_name(sim::Relaying r) { return r == sim::Relaying::Df ? "df" : "af"; }

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"experiment",
       {
           {"name", [](auto& c, const auto& v) { c.name = trim(v); }},
           {"kind",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "outage") c.kind = ExperimentKind::Outage;
              else if (k == "capacity") c.kind = ExperimentKind::Capacity;
              else throw std::invalid_argument("kind must be outage or capacity");
            }},
           {"csi_mode",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "synthetic") c.csi_mode = CsiMode::Synthetic;
              else if (k == "time-series" || k == "time_series") c.csi_mode = CsiMode::TimeSeries;
              else throw std::invalid_argument("csi_mode must be synthetic or time-series");
            }},
           {"schemes",
            [](auto& c, const auto& v) {
              c.schemes = parse_word_list(v);
              for (const auto& s : c.schemes) (void)sim::scheme_from_label(s);
            }},
           {"trials", [](auto& c, const auto& v) { c.trials = parse_int(v); }},
           {"seed", [](auto& c, const auto& v) { c.seed = static_cast<std::uint64_t>(parse_int(v)); }},
           {"output", [](auto& c, const auto& v) { c.output = trim(v); }},
           {"workers", [](auto& c, const auto& v) { c.workers = static_cast<unsigned>(parse_count(v)); }},
       }},
      {"network",
       {
           {"relays",
            [](auto& c, const auto& v) {
              c.relay_counts.clear();
              for (double k : parse_number_list(v)) c.relay_counts.push_back(parse_count(fmt::format("{}", k)));
            }},
           {"relaying",
            [](auto& c, const auto& v) {
              c.relaying.clear();
              for (const auto& w : parse_word_list(v)) c.relaying.push_back(parse_relaying(w));
            }},
           {"selection",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "distributed") c.network.selection = sim::SelectionMode::Distributed;
              else if (k == "centralized") c.network.selection = sim::SelectionMode::Centralized;
              else throw std::invalid_argument("selection must be distributed or centralized");
            }},
           {"af_snr",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "bound") c.network.af_snr = sim::AfSnrModel::Bound;
              else if (k == "exact") c.network.af_snr = sim::AfSnrModel::Exact;
              else throw std::invalid_argument("af_snr must be bound or exact");
            }},
           {"reselect",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "reselect") c.network.reselect = sim::ReselectPolicy::Reselect;
              else if (k == "terminate") c.network.reselect = sim::ReselectPolicy::Terminate;
              else throw std::invalid_argument("reselect must be reselect or terminate");
            }},
           {"rate", [](auto& c, const auto& v) { c.network.target_rate = parse_double(v); }},
           {"source_power", [](auto& c, const auto& v) { c.network.source_power_fraction = parse_double(v); }},
           {"relay_power", [](auto& c, const auto& v) { c.network.relay_power_fraction = parse_double(v); }},
           {"noise_var", [](auto& c, const auto& v) { c.network.noise_var = parse_double(v); }},
           {"timer_c", [](auto& c, const auto& v) { c.network.timer.c = parse_double(v); }},
           {"timer_max", [](auto& c, const auto& v) { c.network.timer.max_duration = parse_double(v); }},
           {"timer_window", [](auto& c, const auto& v) { c.network.timer.uncertainty = parse_double(v); }},
       }},
      {"fading",
       {
           {"doppler_hz", [](auto& c, const auto& v) { c.doppler_hz = parse_number_list(v); }},
           {"sample_rate_hz", [](auto& c, const auto& v) { c.fading.sample_rate_hz = parse_double(v); }},
           {"distribution",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              double kf = 0.0;
              if (const auto* r = std::get_if<channel::Rician>(&c.fading.distribution)) kf = r->k_factor;
              if (k == "rayleigh") c.fading.distribution = channel::Rayleigh{};
              else if (k == "rician") c.fading.distribution = channel::Rician{kf};
              else throw std::invalid_argument("distribution must be rayleigh or rician");
            }},
           {"k_factor",
            [](auto& c, const auto& v) {
              const double kf = parse_double(v);
              if (std::holds_alternative<channel::Rician>(c.fading.distribution)) {
                c.fading.distribution = channel::Rician{kf};
              } else {
                c.fading.distribution = channel::Rician{kf};
              }
            }},
           {"mean_power", [](auto& c, const auto& v) { c.fading.mean_power = parse_double(v); }},
           {"num_sinusoids", [](auto& c, const auto& v) { c.fading.num_sinusoids = parse_count(v); }},
           {"length", [](auto& c, const auto& v) { c.dataset_length = parse_count(v); }},
       }},
      {"csi",
       {
           {"delays_ms", [](auto& c, const auto& v) { c.delays_ms = parse_number_list(v); }},
           {"rho_outdated", [](auto& c, const auto& v) { c.rho_outdated = parse_double(v); }},
           {"rho_predicted", [](auto& c, const auto& v) { c.rho_predicted = parse_double(v); }},
           {"af_correlation",
            [](auto& c, const auto& v) {
              const auto k = lower(trim(v));
              if (k == "end-to-end" || k == "end_to_end") c.af_correlation = sim::AfCorrelation::EndToEnd;
              else if (k == "per-hop" || k == "per_hop") c.af_correlation = sim::AfCorrelation::PerHop;
              else throw std::invalid_argument("af_correlation must be end-to-end or per-hop");
            }},
           {"model", [](auto& c, const auto& v) { c.model_path = trim(v); }},
       }},
      {"grid", {{"snr_db", [](auto& c, const auto& v) { c.snr_db = parse_number_list(v); }}}},
      {"predictor",
       {
           {"kind", [](auto& c, const auto& v) { c.train.kind = predictor::parse_layer_kind(lower(trim(v))); }},
           {"hidden",
            [](auto& c, const auto& v) {
              c.train.hidden.clear();
              for (double h : parse_number_list(v)) c.train.hidden.push_back(parse_count(fmt::format("{}", h)));
            }},
           {"tau", [](auto& c, const auto& v) { c.train.tau = parse_count(v); }},
           {"epochs", [](auto& c, const auto& v) { c.train.epochs = parse_count(v); }},
           {"batch_size", [](auto& c, const auto& v) { c.train.batch_size = parse_count(v); }},
           {"train_len", [](auto& c, const auto& v) { c.train.train_len = parse_count(v); }},
           {"horizon", [](auto& c, const auto& v) { c.train.horizon = parse_count(v); }},
           {"lr", [](auto& c, const auto& v) { c.train.adam.lr = parse_double(v); }},
           {"scale", [](auto& c, const auto& v) { c.train.scale = parse_double(v); }},
           {"input_mode", [](auto& c, const auto& v) { c.train.mode = predictor::parse_input_mode(lower(trim(v))); }},
           {"seed", [](auto& c, const auto& v) { c.train.seed = static_cast<std::uint64_t>(parse_int(v)); }},
       }},
      {"impairments",
       {
           {"pilot_snr_db", [](auto& c, const auto& v) { c.pilot_snr_db = parse_number_list(v); }},
           {"max_phase_deg", [](auto& c, const auto& v) { c.max_phase_deg = parse_number_list(v); }},
       }},
      {"flops",
       {
           {"links", [](auto& c, const auto& v) { c.flops_links = parse_count(v); }},
           {"input_mode", [](auto& c, const auto& v) { c.flops_mode = predictor::parse_input_mode(lower(trim(v))); }},
           {"rate_hz", [](auto& c, const auto& v) { c.flops_rate_hz = parse_double(v); }},
       }},
  };
  return table;
}

}  // namespace

IniDocument parse_ini(std::istream& in, const std::string& source) {
  IniDocument doc;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error(fmt::format("{}:{}: unterminated section header", source, line_no));
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw std::runtime_error(fmt::format("{}:{}: empty section name", source, line_no));
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(fmt::format("{}:{}: expected key = value", source, line_no));
    if (section.empty()) throw std::runtime_error(fmt::format("{}:{}: key outside of a section", source, line_no));
    const std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw std::runtime_error(fmt::format("{}:{}: empty key", source, line_no));
    auto& sec = doc[section];
    if (sec.count(key)) throw std::runtime_error(fmt::format("{}:{}: duplicate key '{}'", source, line_no, key));
    sec[key] = IniEntry{value, line_no};
  }
  return doc;
}

std::vector<double> parse_number_list(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return {};
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(t);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(parse_double(p));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw std::invalid_argument(fmt::format("range '{}' must be start:stop:step with step > 0", t));
    }
    const auto n = static_cast<std::int64_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (std::int64_t i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return out;
  }
  std::stringstream ss(t);
  std::string p;
  while (std::getline(ss, p, ',')) out.push_back(parse_double(p));
  return out;
}

std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string p;
  while (std::getline(ss, p, ',')) {
    p = trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

void apply_ini(ExperimentConfig& cfg, const IniDocument& doc) {
  const auto& table = setters();
  for (const auto& [section, entries] : doc) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      const int line = entries.empty() ? 0 : entries.begin()->second.line;
      throw std::runtime_error(fmt::format("line {}: unknown section [{}]", line, section));
    }
    for (const auto& [key, entry] : entries) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        throw std::runtime_error(fmt::format("line {}: unknown key '{}' in [{}]", entry.line, key, section));
      }
      try {
        setter->second(cfg, entry.value);
      } catch (const std::exception& e) {
        throw std::runtime_error(fmt::format("line {}: {}.{}: {}", entry.line, section, key, e.what()));
      }
    }
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  ExperimentConfig cfg;
  const auto doc = parse_ini(in, path);
  try {
    apply_ini(cfg, doc);
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("{}: {}", path, e.what()));
  }
  return cfg;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig3b", "fig4a", "fig4b", "fig6a", "fig6b", "fig7a", "fig7b"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "fig3b") {
    // Correlation of outdated and predicted CSI against the delay.
    c.doppler_hz = {50.0, 100.0};
    c.delays_ms = {1, 2, 3, 4, 5};
    c.dataset_length = 30000;
  } else if (name == "fig4a") {
    c.schemes = {"ORS-perfect", "ORS", "OSTC", "PRS"};
    c.delays_ms = {2.0, 3.0};
  } else if (name == "fig4b") {
    c.relaying = {sim::Relaying::Af};
    c.schemes = {"ORS-perfect", "ORS", "PRS"};
    c.delays_ms = {1.0, 2.0, 3.0};
  } else if (name == "fig6a") {
    c.kind = ExperimentKind::Capacity;
    c.relaying = {sim::Relaying::Df, sim::Relaying::Af};
    c.schemes = {"ORS-perfect", "ORS", "OSTC", "PRS"};
    c.delays_ms = {3.0};
  } else if (name == "fig6b") {
    c.schemes = {"ORS", "PRS"};
    c.delays_ms = {3.0};
    c.pilot_snr_db = {30.0, 25.0, 20.0};
    c.max_phase_deg = {5.0, 10.0, 20.0};
  } else if (name == "fig7a") {
    c.csi_mode = CsiMode::TimeSeries;
    c.fading.distribution = channel::Rician{1.0};
    c.doppler_hz = {25.0, 50.0, 100.0};
    c.schemes = {"ORS", "PRS"};
    c.delays_ms = {3.0};
    c.trials = 20000;
    c.snr_db = {0, 4, 8, 12, 16, 20, 24, 28};
  } else if (name == "fig7b") {
    c.relay_counts = {1, 2, 6};
    c.schemes = {"ORS", "PRS", "DT"};
    c.delays_ms = {3.0};
  } else {
    throw std::invalid_argument(fmt::format("unknown preset '{}' (expected one of {})", name,
                                            fmt::join(preset_names(), ", ")));
  }
  return c;
}

std::string canonical(const ExperimentConfig& c) {
  std::string out;
  auto add = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  add("name", c.name);
  add("kind", c.kind == ExperimentKind::Outage ? "outage" : "capacity");
  add("csi_mode", c.csi_mode == CsiMode::Synthetic ? "synthetic" : "time-series");
  add("schemes", fmt::format("{}", fmt::join(c.schemes, ",")));
  add("trials", std::to_string(c.trials));
  add("relays", fmt::format("{}", fmt::join(c.relay_counts, ",")));
  std::vector<std::string> rel;
  for (auto r : c.relaying) rel.push_back(relaying_name(r));
  add("relaying", fmt::format("{}", fmt::join(rel, ",")));
  const auto& n = c.network;
  add("network", fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{:.17g},{:.17g},{:.17g}", n.target_rate,
                             n.source_power_fraction, n.relay_power_fraction, n.noise_var,
                             static_cast<int>(n.selection), static_cast<int>(n.af_snr), static_cast<int>(n.reselect),
                             n.timer.c, n.timer.max_duration, n.timer.uncertainty));
  double kf = -1.0;
  if (const auto* r = std::get_if<channel::Rician>(&c.fading.distribution)) kf = r->k_factor;
  add("fading", fmt::format("{:.17g},{:.17g},{:.17g},{},{}", c.fading.sample_rate_hz, kf, c.fading.mean_power,
                            c.fading.num_sinusoids, c.dataset_length));
  add("doppler", fmt::format("{}", fmt::join(c.doppler_hz, ",")));
  add("delays", fmt::format("{}", fmt::join(c.delays_ms, ",")));
  add("rho_outdated", c.rho_outdated ? fmt::format("{:.17g}", *c.rho_outdated) : "auto");
  add("rho_predicted", fmt::format("{:.17g}", c.rho_predicted));
  add("af_correlation", c.af_correlation == sim::AfCorrelation::EndToEnd ? "end-to-end" : "per-hop");
  add("model", c.model_path);
  add("snr", fmt::format("{}", fmt::join(c.snr_db, ",")));
  const auto& t = c.train;
  add("train", fmt::format("{},{},{},{},{},{},{:.17g},{:.17g},{},{}", predictor::to_string(t.kind),
                           fmt::join(t.hidden, "/"), t.tau, t.epochs, t.batch_size, t.train_len, t.adam.lr, t.scale,
                           predictor::to_string(t.mode), t.seed));
  add("pilot", fmt::format("{}", fmt::join(c.pilot_snr_db, ",")));
  add("phase", fmt::format("{}", fmt::join(c.max_phase_deg, ",")));
  add("flops", fmt::format("{},{},{:.17g}", c.flops_links, predictor::to_string(c.flops_mode), c.flops_rate_hz));
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace prs::config
