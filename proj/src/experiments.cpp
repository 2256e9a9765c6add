// SPDX-License-Identifier: Apache-2.0

#include "prs/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prs/analytics.hpp"
#include "prs/channel.hpp"
#include "prs/numerics.hpp"
#include "prs/selection.hpp"
#include "prs/simulator.hpp"

namespace prs::experiments {

namespace {

// Stream offset for predictor training data, far from the simulation links.
constexpr std::uint64_t kTrainingLink = 0x7472616eULL;

std::string relaying_name(sim::Relaying r) { return r == sim::Relaying::Df ? "DF" : "AF"; }

struct Variant {
  std::string label;
  sim::ImpairmentConfig impairments;
};

std::vector<Variant> variants(const config::ExperimentConfig& cfg) {
  std::vector<Variant> out{{"none", {}}};
  for (double p : cfg.pilot_snr_db) out.push_back({fmt::format("pilot={:g}dB", p), {p, std::nullopt}});
  for (double d : cfg.max_phase_deg) out.push_back({fmt::format("phase={:g}deg", d), {std::nullopt, d}});
  return out;
}

std::string format_number(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

std::string csv_header() {
  return "scheme,K,rho_mode,snr_db,outage,std_err,rate,collision_rate,trials,seed,analytic,rate_std_err,relaying,"
         "variant,config_hash";
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  fmt::print(out, "{}\n", csv_header());
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.scheme, r.relays, r.rho_mode,
               format_number(r.snr_db), format_number(r.outage), format_number(r.std_err), format_number(r.rate),
               format_number(r.collision_rate), r.trials, r.seed, r.analytic ? format_number(*r.analytic) : "",
               format_number(r.rate_std_err), r.relaying, r.variant, r.config_hash);
  }
}

std::size_t horizon_samples(double delay_ms, double sample_rate_hz) {
  const double d = delay_ms * sample_rate_hz / 1000.0;
  const auto n = static_cast<std::size_t>(std::llround(d));
  if (n == 0 || std::abs(d - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument(
        fmt::format("delay {} ms is not a positive whole number of samples at {} Hz", delay_ms, sample_rate_hz));
  }
  return n;
}

std::optional<double> analytic_value(const config::ExperimentConfig& cfg, const std::string& scheme,
                                     sim::Relaying relaying, std::size_t relays, double rho_predicted,
                                     double snr_db) {
  if (!std::holds_alternative<channel::Rayleigh>(cfg.fading.distribution)) return std::nullopt;
  const double snr = std::pow(10.0, snr_db / 10.0) * cfg.fading.mean_power;
  const selection::RateConfig rate(cfg.network.target_rate);
  if (scheme == "DT") {
    if (cfg.kind == config::ExperimentKind::Capacity) return analytics::exponential_capacity(snr);
    return 1.0 - std::exp(-rate.direct_threshold() / snr);
  }
  double rho = 0.0;
  if (scheme == "PRS") rho = rho_predicted;
  else if (scheme == "ORS-perfect") rho = 1.0;
  else return std::nullopt;
  rho = std::clamp(rho, 0.0, 1.0);
  const double g_sr = cfg.network.source_power_fraction * snr;
  const double g_rd = cfg.network.relay_power_fraction * snr;
  const int K = static_cast<int>(relays);
  if (cfg.kind == config::ExperimentKind::Outage) {
    if (relaying == sim::Relaying::Df) return analytics::outage_df({K, g_sr, g_rd, rho, rate.threshold()});
    return analytics::outage_af({K, g_sr, g_rd, rho, rate.threshold()});
  }
  const auto rule = numerics::gauss_chebyshev(analytics::kDefaultQuadratureOrder);
  if (relaying == sim::Relaying::Df) return analytics::capacity_df({K, g_sr, g_rd, rho, rate.threshold()}, rule);
  return analytics::capacity_af({K, g_sr, g_rd, rho, rate.threshold()}, rule, true);
}

channel::GainSeries training_series(const config::ExperimentConfig& cfg, double doppler_hz, std::size_t length) {
  auto fading = cfg.fading;
  fading.doppler_hz = doppler_hz;
  fading.seed = cfg.seed;
  return channel::generate_series(fading, length, kTrainingLink);
}

predictor::PredictorModel train_on_series(const channel::GainSeries& series, const predictor::TrainConfig& train,
                                          predictor::TrainReport* report) {
  const std::vector<channel::GainSeries> one{series};
  return predictor::train_predictor(one, train, report);
}

std::vector<ResultRow> run_sweep(const config::ExperimentConfig& cfg, Log log) {
  if (cfg.trials <= 0) throw std::invalid_argument("trials must be positive");
  if (cfg.schemes.empty()) throw std::invalid_argument("no schemes selected");
  if (cfg.snr_db.empty()) throw std::invalid_argument("empty SNR grid");
  const std::string hash = config::config_hash(cfg);

  std::vector<sim::SchemeSpec> specs;
  bool need_outdated = false, need_predicted = false;
  for (const auto& label : cfg.schemes) {
    specs.push_back(sim::scheme_from_label(label));
    need_outdated |= specs.back().quality == sim::CsiQuality::Outdated;
    need_predicted |= specs.back().quality == sim::CsiQuality::Predicted;
  }

  // Trained predictors per (Doppler, horizon), reused across cells.
  std::map<std::pair<double, std::size_t>, predictor::PredictorModel> models;
  auto model_for = [&](double fd, std::size_t horizon) -> predictor::PredictorModel& {
    const auto key = std::make_pair(fd, horizon);
    if (auto it = models.find(key); it != models.end()) return it->second;
    auto model = [&]() {
      if (!cfg.model_path.empty()) {
        auto loaded = predictor::load_model_file(cfg.model_path);
        if (loaded.horizon != horizon) {
          throw std::invalid_argument(fmt::format("model {} predicts {} samples ahead, delay needs {}",
                                                  cfg.model_path, loaded.horizon, horizon));
        }
        return loaded;
      }
      auto train = cfg.train;
      train.horizon = horizon;
      const std::size_t len = train.tau + train.train_len + horizon + 2000;
      predictor::TrainReport report;
      auto trained = train_on_series(training_series(cfg, fd, len), train, &report);
      if (log) fmt::print(*log, "trained predictor f_d={:g} Hz D={} rho={:.4f}\n", fd, horizon, report.rho);
      return trained;
    }();
    return models.emplace(key, std::move(model)).first->second;
  };

  std::vector<ResultRow> rows;
  for (const auto relaying : cfg.relaying) {
    for (const std::size_t K : cfg.relay_counts) {
      for (const double fd : cfg.doppler_hz) {
        for (const double delay : cfg.delays_ms) {
          for (const auto& variant : variants(cfg)) {
            sim::NetworkConfig net = cfg.network;
            net.relays = K;
            net.relaying = relaying;
            net.validate();

            sim::EstimateRequest req;
            req.schemes = specs;
            req.network = net;
            req.snr_db = cfg.snr_db;
            req.trials = cfg.trials;
            req.seed = cfg.seed;
            req.impairments = variant.impairments;
            req.workers = cfg.workers;

            const double rho_o = cfg.rho_outdated.value_or(channel::jakes_correlation(fd, delay / 1000.0));
            double rho_p = cfg.rho_predicted;
            std::string rho_mode;
            sim::SourceFactory factory;
            if (cfg.csi_mode == config::CsiMode::Synthetic) {
              sim::SyntheticCsiConfig sc;
              sc.relays = K;
              sc.rho_outdated = rho_o;
              sc.rho_predicted = rho_p;
              sc.relaying = relaying;
              sc.af_correlation = cfg.af_correlation;
              sc.sr_weight = net.source_power_fraction;
              sc.rd_weight = net.relay_power_fraction;
              sc.need_outdated = need_outdated;
              sc.need_predicted = need_predicted;
              factory = sim::synthetic_factory(sc, cfg.seed);
              rho_mode = fmt::format("synthetic:fd={:g}/tau={:g}ms/rho_o={:.4f}/rho_p={:.4f}", fd, delay, rho_o, rho_p);
            } else {
              const std::size_t D = horizon_samples(delay, cfg.fading.sample_rate_hz);
              auto& model = model_for(fd, D);
              sim::TimeSeriesBuild build;
              build.relays = K;
              build.frames = sim::frames_required(cfg.trials, req.chunk_frames);
              build.fading = cfg.fading;
              build.fading.doppler_hz = fd;
              build.fading.seed = cfg.seed;
              build.impairments = variant.impairments;
              build.predict_source_hop = relaying == sim::Relaying::Af;
              auto data = sim::build_time_series(build, model);
              rho_p = data->rho_predicted;
              factory = sim::time_series_factory(data);
              rho_mode = fmt::format("time-series:fd={:g}/D={}/rho_o={:.4f}/rho_p={:.4f}", fd, D,
                                     channel::jakes_correlation(fd, delay / 1000.0), rho_p);
            }

            const auto result = sim::estimate(req, factory);
            for (std::size_t s = 0; s < specs.size(); ++s) {
              for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
                const auto& e = result[s][i];
                ResultRow row;
                row.scheme = specs[s].label;
                row.relays = K;
                row.rho_mode = rho_mode;
                row.snr_db = cfg.snr_db[i];
                row.outage = e.outage_prob;
                row.std_err = e.std_error;
                row.rate = e.mean_rate;
                row.collision_rate = e.collision_rate;
                row.trials = e.trials;
                row.seed = cfg.seed;
                if (variant.label == "none") {
                  row.analytic = analytic_value(cfg, row.scheme, relaying, K, rho_p, row.snr_db);
                }
                row.rate_std_err = e.rate_std_error;
                row.relaying = relaying_name(relaying);
                row.variant = variant.label;
                row.config_hash = hash;
                rows.push_back(std::move(row));
              }
            }
            if (log) {
              fmt::print(*log, "done {} K={} f_d={:g} delay={:g}ms variant={}\n", relaying_name(relaying), K, fd,
                         delay, variant.label);
            }
          }
        }
      }
    }
  }
  return rows;
}

std::vector<PredictEvalRow> run_predict_eval(const config::ExperimentConfig& cfg, Log log) {
  std::vector<PredictEvalRow> rows;
  for (const double fd : cfg.doppler_hz) {
    for (const double delay : cfg.delays_ms) {
      const std::size_t D = horizon_samples(delay, cfg.fading.sample_rate_hz);
      auto train = cfg.train;
      train.horizon = D;
      const std::size_t len = std::max(cfg.dataset_length, train.tau + train.train_len + D + 1000);
      const auto series = training_series(cfg, fd, len);
      predictor::TrainReport report;
      (void)train_on_series(series, train, &report);
      PredictEvalRow row;
      row.doppler_hz = fd;
      row.delay_ms = delay;
      row.horizon = D;
      row.rho_outdated = channel::jakes_correlation(fd, delay / 1000.0);
      row.rho_outdated_empirical = channel::autocorrelation(series, D);
      row.rho_predicted = report.rho;
      row.magnitude_corr = report.magnitude_corr;
      row.validation_mse = report.validation_mse;
      rows.push_back(row);
      if (log) {
        fmt::print(*log, "f_d={:g} Hz delay={:g} ms: rho_o={:.4f} rho_pred={:.4f}\n", fd, delay, row.rho_outdated,
                   row.rho_predicted);
      }
    }
  }
  return rows;
}

void write_predict_eval_csv(std::ostream& out, const std::vector<PredictEvalRow>& rows, const std::string& hash) {
  fmt::print(out,
             "doppler_hz,delay_ms,horizon,rho_outdated,rho_outdated_empirical,rho_predicted,magnitude_corr,"
             "validation_mse,config_hash\n");
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", format_number(r.doppler_hz), format_number(r.delay_ms),
               r.horizon, format_number(r.rho_outdated), format_number(r.rho_outdated_empirical),
               format_number(r.rho_predicted), format_number(r.magnitude_corr), format_number(r.validation_mse),
               hash);
  }
}

std::vector<FlopsRow> flops_table(const config::ExperimentConfig& cfg) {
  const std::size_t width = cfg.flops_mode == predictor::InputMode::Complex ? 2 * cfg.flops_links : cfg.flops_links;
  const auto& hidden = cfg.train.hidden;
  if (hidden.empty()) throw std::invalid_argument("flops: no hidden layers");
  std::vector<FlopsRow> rows;
  for (const auto kind : {predictor::LayerKind::Rnn, predictor::LayerKind::Gru, predictor::LayerKind::Lstm}) {
    const auto stack = predictor::make_stack(kind, width * (cfg.train.tau + 1), hidden, width);
    FlopsRow row;
    row.kind = std::string(predictor::to_string(kind));
    row.exact = predictor::flops_per_step(stack);
    row.simplified = predictor::flops_simplified(kind, hidden.size(), hidden.front());
    row.flops_per_second = static_cast<double>(row.exact) * cfg.flops_rate_hz;
    rows.push_back(row);
  }
  return rows;
}

void write_flops_csv(std::ostream& out, const std::vector<FlopsRow>& rows) {
  fmt::print(out, "kind,exact_ops,simplified_ops,flops_per_second,mflops\n");
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{}\n", r.kind, r.exact, r.simplified, format_number(r.flops_per_second),
               format_number(r.flops_per_second / 1e6));
  }
}

std::vector<std::string> generate_dataset(const config::ExperimentConfig& cfg, std::size_t links,
                                          const std::string& dir) {
  if (links == 0) throw std::invalid_argument("gen-data: need at least one link");
  if (cfg.doppler_hz.empty()) throw std::invalid_argument("gen-data: no Doppler frequency");
  auto fading = cfg.fading;
  fading.doppler_hz = cfg.doppler_hz.front();
  fading.seed = cfg.seed;
  fading.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t k = 0; k < links; ++k) {
    const auto path = (std::filesystem::path(dir) / fmt::format("link_{}.csv", k)).string();
    channel::save_series_csv(path, channel::generate_series(fading, cfg.dataset_length, k));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace prs::experiments
