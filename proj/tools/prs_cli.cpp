// SPDX-License-Identifier: Apache-2.0
//
// prs: experiment runner for predictive relay selection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prs/channel.hpp"
#include "prs/config.hpp"
#include "prs/experiments.hpp"
#include "prs/predictor.hpp"

namespace {

using prs::config::ExperimentConfig;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::string out;
  std::string model;
  std::string data;
  std::optional<unsigned> workers;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "INI experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "fig3b, fig4a, fig4b, fig6a, fig6b, fig7a or fig7b");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--trials", o.trials, "Monte-Carlo frames per SNR point");
  cmd->add_option("--out", o.out, "output file or directory");
  cmd->add_option("--model", o.model, "predictor model file");
  cmd->add_option("--data", o.data, "link series CSV (index,re,im)");
  cmd->add_option("--workers", o.workers, "worker threads, 0 for all cores");
  cmd->add_flag("--quiet", o.quiet, "no progress on stderr");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.preset.empty() ? ExperimentConfig{} : prs::config::preset(o.preset);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::runtime_error("cannot open config " + o.config_path);
    const auto doc = prs::config::parse_ini(in, o.config_path);
    try {
      prs::config::apply_ini(cfg, doc);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("{}: {}", o.config_path, e.what()));
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (!o.out.empty()) cfg.output = o.out;
  if (!o.model.empty()) cfg.model_path = o.model;
  if (o.workers) cfg.workers = *o.workers;
  return cfg;
}

// Writes to cfg.output, or stdout when unset.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::ostream* progress(const CommonOptions& o) { return o.quiet ? nullptr : &std::cerr; }

std::vector<prs::channel::GainSeries> load_data(const std::string& path) {
  std::vector<prs::channel::GainSeries> out;
  if (std::filesystem::is_directory(path)) {
    for (std::size_t k = 0;; ++k) {
      const auto file = std::filesystem::path(path) / fmt::format("link_{}.csv", k);
      if (!std::filesystem::exists(file)) break;
      out.push_back(prs::channel::load_series_csv(file.string()));
    }
    if (out.empty()) throw std::runtime_error("no link_<k>.csv files in " + path);
  } else {
    out.push_back(prs::channel::load_series_csv(path));
  }
  return out;
}

void print_train_report(std::ostream& out, const prs::predictor::TrainReport& r) {
  fmt::print(out, "key,value\n");
  for (std::size_t e = 0; e < r.epoch_mse.size(); ++e) fmt::print(out, "epoch_{}_mse,{:.10g}\n", e + 1, r.epoch_mse[e]);
  fmt::print(out, "validation_mse,{:.10g}\nrho,{:.10g}\nmagnitude_corr,{:.10g}\n", r.validation_mse, r.rho,
             r.magnitude_corr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive relay selection: channel prediction, Monte-Carlo and closed-form studies"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::size_t links = 8;
  std::optional<std::size_t> length;

  auto* gen = app.add_subcommand("gen-data", "write Jakes link series as link_<k>.csv");
  add_common(gen, opt);
  gen->add_option("--links", links, "number of links")->check(CLI::PositiveNumber);
  gen->add_option("--length", length, "samples per link");

  auto* train = app.add_subcommand("train", "train a channel predictor and save it");
  add_common(train, opt);

  auto* eval = app.add_subcommand("predict-eval", "predicted versus outdated CSI correlation");
  add_common(eval, opt);

  auto* outage = app.add_subcommand("outage", "outage probability sweep");
  add_common(outage, opt);
  auto* capacity = app.add_subcommand("capacity", "ergodic capacity sweep");
  add_common(capacity, opt);
  auto* flops = app.add_subcommand("flops", "predictor complexity table");
  add_common(flops, opt);
  auto* proto = app.add_subcommand("protocol-sim", "frame protocol on predicted Jakes series");
  add_common(proto, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg = resolve(opt);
    if (gen->parsed()) {
      if (cfg.output.empty()) throw std::runtime_error("gen-data needs --out <directory>");
      if (length) cfg.dataset_length = *length;
      const auto paths = prs::experiments::generate_dataset(cfg, links, cfg.output);
      if (!opt.quiet) fmt::print(std::cerr, "wrote {} series of {} samples to {}\n", paths.size(),
                                 cfg.dataset_length, cfg.output);
    } else if (train->parsed()) {
      if (cfg.model_path.empty()) throw std::runtime_error("train needs --model <file> for the trained model");
      prs::channel::GainSeries series;
      if (!opt.data.empty()) {
        series = load_data(opt.data).front();
      } else {
        const auto& t = cfg.train;
        series = prs::experiments::training_series(cfg, cfg.doppler_hz.front(),
                                                   std::max(cfg.dataset_length, t.tau + t.train_len + t.horizon));
      }
      prs::predictor::TrainReport report;
      const auto model = prs::experiments::train_on_series(series, cfg.train, &report);
      prs::predictor::save_model_file(cfg.model_path, model);
      // The model path doubles as --model; the report goes to stdout.
      print_train_report(std::cout, report);
    } else if (eval->parsed()) {
      if (!opt.model.empty() && !opt.data.empty()) {
        auto model = prs::predictor::load_model_file(opt.model);
        const auto data = load_data(opt.data);
        const auto res = prs::predictor::predict_series(model, data);
        with_output(cfg.output, [&](std::ostream& out) {
          fmt::print(out, "horizon,rho_predicted,magnitude_corr,mse\n{},{:.10g},{:.10g},{:.10g}\n", model.horizon,
                     res.rho, res.magnitude_corr, res.mse);
        });
      } else {
        const auto rows = prs::experiments::run_predict_eval(cfg, progress(opt));
        with_output(cfg.output, [&](std::ostream& out) {
          prs::experiments::write_predict_eval_csv(out, rows, prs::config::config_hash(cfg));
        });
      }
    } else if (outage->parsed() || capacity->parsed() || proto->parsed()) {
      if (outage->parsed()) cfg.kind = prs::config::ExperimentKind::Outage;
      if (capacity->parsed()) cfg.kind = prs::config::ExperimentKind::Capacity;
      if (proto->parsed()) cfg.csi_mode = prs::config::CsiMode::TimeSeries;
      const auto rows = prs::experiments::run_sweep(cfg, progress(opt));
      with_output(cfg.output, [&](std::ostream& out) { prs::experiments::write_csv(out, rows); });
    } else if (flops->parsed()) {
      const auto rows = prs::experiments::flops_table(cfg);
      with_output(cfg.output, [&](std::ostream& out) { prs::experiments::write_flops_csv(out, rows); });
    }
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "prs: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
