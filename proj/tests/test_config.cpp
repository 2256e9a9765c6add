// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>

#include <doctest.h>

#include "prs/channel.hpp"
#include "prs/config.hpp"
#include "prs/experiments.hpp"

using namespace prs;
using namespace prs::config;

namespace {

IniDocument ini(const std::string& text) {
  std::istringstream in(text);
  return parse_ini(in, "test");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("ini parsing") {
  const auto doc = ini("# comment\n[Experiment]\nname = demo # trailing\n; other\n\n[grid]\nsnr_db=0:4:2\n");
  CHECK(doc.at("experiment").at("name").value == "demo");
  CHECK(doc.at("experiment").at("name").line == 3);
  CHECK(doc.at("grid").at("snr_db").value == "0:4:2");
  CHECK(error_of([] { ini("[a]\nx=1\nx=2\n"); }).find("test:3") != std::string::npos);
  CHECK_THROWS_AS(ini("x = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(ini("[a\n"), std::runtime_error);
  CHECK_THROWS_AS(ini("[a]\njunk\n"), std::runtime_error);
}

TEST_CASE("number and word lists") {
  const auto g = parse_number_list("0:30:2");
  REQUIRE(g.size() == 16);
  CHECK(g.back() == 30.0);
  CHECK(parse_number_list("1, 2.5,4") == std::vector<double>{1, 2.5, 4});
  CHECK(parse_number_list("").empty());
  CHECK_THROWS_AS(parse_number_list("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number_list("0:10:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_number_list("1,x"), std::invalid_argument);
  CHECK(parse_word_list(" ORS , PRS,") == std::vector<std::string>{"ORS", "PRS"});
}

TEST_CASE("applying a config") {
  ExperimentConfig cfg;
  apply_ini(cfg, ini("[experiment]\nkind = capacity\nschemes = ORS, DT\ntrials = 500\n"
                     "[network]\nrelays = 1,2\nrelaying = af\nrate = 2\n"
                     "[fading]\ndistribution = rician\nk_factor = 2\n"
                     "[csi]\ndelays_ms = 1:3:1\nrho_outdated = 0.5\n"
                     "[predictor]\nhidden = 10,10,10\nkind = gru\n[flops]\nlinks = 4\n"));
  CHECK(cfg.kind == ExperimentKind::Capacity);
  CHECK(cfg.schemes == std::vector<std::string>{"ORS", "DT"});
  CHECK(cfg.trials == 500);
  CHECK(cfg.relay_counts == std::vector<std::size_t>{1, 2});
  CHECK(cfg.relaying == std::vector<sim::Relaying>{sim::Relaying::Af});
  CHECK(cfg.network.target_rate == 2.0);
  REQUIRE(std::holds_alternative<channel::Rician>(cfg.fading.distribution));
  CHECK(std::get<channel::Rician>(cfg.fading.distribution).k_factor == 2.0);
  CHECK(cfg.delays_ms.size() == 3);
  CHECK(cfg.rho_outdated == 0.5);
  CHECK(cfg.train.hidden.size() == 3);
  CHECK(cfg.train.kind == predictor::LayerKind::Gru);
  CHECK(cfg.flops_links == 4);

  const auto unknown = error_of([] {
    ExperimentConfig c;
    apply_ini(c, ini("[network]\nrelays = 8\nrelayz = 3\n"));
  });
  CHECK(unknown.find("line 3") != std::string::npos);
  CHECK(unknown.find("relayz") != std::string::npos);
  ExperimentConfig c;
  CHECK_THROWS_AS(apply_ini(c, ini("[nope]\na = 1\n")), std::runtime_error);
  CHECK_THROWS_AS(apply_ini(c, ini("[experiment]\ntrials = many\n")), std::runtime_error);
  CHECK_THROWS_AS(apply_ini(c, ini("[experiment]\nschemes = ORS, XRS\n")), std::runtime_error);
  CHECK_THROWS_AS(apply_ini(c, ini("[network]\nrelaying = cf\n")), std::runtime_error);
}

TEST_CASE("presets") {
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name));
  CHECK(preset_names().size() == 7);
  CHECK_THROWS_AS(preset("fig9"), std::invalid_argument);
  CHECK(preset("fig7b").relay_counts == std::vector<std::size_t>{1, 2, 6});
  CHECK(preset("fig4b").relaying == std::vector<sim::Relaying>{sim::Relaying::Af});
  CHECK(preset("fig6a").kind == ExperimentKind::Capacity);
  CHECK(preset("fig7a").csi_mode == CsiMode::TimeSeries);
  // Defaults follow the simulation configuration table.
  const ExperimentConfig d;
  CHECK(d.fading.sample_rate_hz == 1000.0);
  CHECK(d.doppler_hz == std::vector<double>{100.0});
  CHECK(d.relay_counts == std::vector<std::size_t>{8});
  CHECK(d.train.tau == 4);
  CHECK(d.train.hidden == std::vector<std::size_t>{25, 25});
  CHECK(d.train.batch_size == 256);
}

TEST_CASE("config hash") {
  ExperimentConfig a;
  const auto h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h == config_hash(ExperimentConfig{}));
  a.trials = 7;
  CHECK(config_hash(a) != h);
  ExperimentConfig b;
  b.output = "elsewhere.csv";
  b.workers = 3;
  CHECK(config_hash(b) == h);
}

TEST_CASE("horizon from delay") {
  CHECK(experiments::horizon_samples(3.0, 1000.0) == 3);
  CHECK_THROWS_AS(experiments::horizon_samples(2.5, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(experiments::horizon_samples(0.0, 1000.0), std::invalid_argument);
}

TEST_CASE("dataset generation is deterministic") {
  const auto dir = std::filesystem::temp_directory_path() / "prs_test_gen";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.dataset_length = 10;
  const auto a = experiments::generate_dataset(cfg, 2, (dir / "a").string());
  const auto b = experiments::generate_dataset(cfg, 2, (dir / "b").string());
  REQUIRE(a.size() == 2);
  CHECK(channel::load_series_csv(a[0]).size() == 10);
  CHECK(slurp(a[0]) == slurp(b[0]));
  CHECK(slurp(a[0]) != slurp(a[1]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("flops table") {
  const auto rows = experiments::flops_table(ExperimentConfig{});
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].kind == "lstm");
  CHECK(rows[2].exact == 25400);
  CHECK(rows[2].flops_per_second == 25.4e6);
  CHECK(rows[1].simplified == 17500);
  CHECK(rows[0].exact < rows[2].exact);
}

TEST_CASE("smoke sweep") {
  ExperimentConfig cfg;
  cfg.trials = 1000;
  const auto start = std::chrono::steady_clock::now();
  const auto rows = experiments::run_sweep(cfg);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
  CHECK(rows.size() == cfg.schemes.size() * cfg.snr_db.size());
  for (const auto& r : rows) {
    if (r.scheme == "ORS" || r.scheme == "OSTC") CHECK_FALSE(r.analytic.has_value());
    if (r.scheme == "PRS" || r.scheme == "ORS-perfect") CHECK(r.analytic.has_value());
    CHECK(r.config_hash == config_hash(cfg));
  }
  std::ostringstream a, b;
  experiments::write_csv(a, rows);
  experiments::write_csv(b, experiments::run_sweep(cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("scheme,K,rho_mode,snr_db,outage,std_err,rate,collision_rate,trials,seed", 0) == 0);
}

TEST_CASE("fig7b ordering on a short run") {
  auto cfg = preset("fig7b");
  cfg.trials = 20000;
  const auto rows = experiments::run_sweep(cfg);
  auto find = [&](const std::string& s, std::size_t K, double snr) {
    for (const auto& r : rows) {
      if (r.scheme == s && r.relays == K && r.snr_db == snr) return r.outage;
    }
    FAIL("missing row");
    return 0.0;
  };
  for (double snr : cfg.snr_db) CHECK(find("ORS", 1, snr) > find("DT", 1, snr));
  CHECK(find("PRS", 6, 30.0) < find("DT", 6, 30.0));
}

TEST_CASE("shorter training is worse") {
  ExperimentConfig cfg;
  const auto series = experiments::training_series(cfg, 100.0, 12000);
  predictor::TrainReport full, half;
  auto tc = cfg.train;
  experiments::train_on_series(series, tc, &full);
  tc.train_len = 2500;
  experiments::train_on_series(series, tc, &half);
  CHECK(half.validation_mse > full.validation_mse);
}
