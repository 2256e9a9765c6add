// SPDX-License-Identifier: Apache-2.0

#include "prs/channel.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prs/numerics.hpp"

namespace prs::channel {

using numerics::kPi;

void FadingProcessConfig::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("fading: sample rate must be positive");
  if (!(doppler_hz >= 0.0)) throw std::invalid_argument("fading: Doppler must be nonnegative");
  if (!(doppler_hz < 0.5 * sample_rate_hz)) {
    throw std::invalid_argument("fading: Doppler must stay below half the sample rate");
  }
  if (!(mean_power > 0.0)) throw std::invalid_argument("fading: mean power must be positive");
  if (num_sinusoids == 0) throw std::invalid_argument("fading: need at least one sinusoid");
  if (const auto* r = std::get_if<Rician>(&distribution); r && !(r->k_factor >= 0.0)) {
    throw std::invalid_argument("fading: Rician K-factor must be nonnegative");
  }
}

void OutdatedCsiModel::validate() const {
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("outdated CSI: |rho| must be <= 1");
  if (!(sigma_outdated > 0.0) || !(sigma_actual > 0.0)) {
    throw std::invalid_argument("outdated CSI: standard deviations must be positive");
  }
}

double jakes_correlation(double doppler_hz, double tau_s) {
  return numerics::bessel_j0(2.0 * kPi * doppler_hz * tau_s);
}

namespace {

// One quadrature component sqrt(1/N) sum_n cos(w_n t + phi_n) with unit
// total power split evenly, so each component has variance 1/2.
// Phasors are advanced by rotation and re-anchored to the exact phase every
// kAnchor samples to keep rounding drift far below 1e-12.
void add_component(std::vector<double>& out, double doppler_norm, std::size_t n_sin,
                   Stream& rng) {
  constexpr std::size_t kAnchor = 1024;
  const double theta = rng.uniform(-kPi, kPi);
  const double amp = std::sqrt(1.0 / static_cast<double>(n_sin));
  for (std::size_t n = 1; n <= n_sin; ++n) {
    const double alpha = (2.0 * kPi * static_cast<double>(n) - kPi + theta) / (4.0 * n_sin);
    const double omega = 2.0 * kPi * doppler_norm * std::cos(alpha);
    const double phase0 = rng.uniform(-kPi, kPi);
    const std::complex<double> step = std::polar(1.0, omega);
    std::complex<double> phasor;
    for (std::size_t t = 0; t < out.size(); ++t) {
      if (t % kAnchor == 0) phasor = std::polar(1.0, omega * static_cast<double>(t) + phase0);
      out[t] += amp * phasor.real();
      phasor *= step;
    }
  }
}

}  // namespace

GainSeries generate_series(const FadingProcessConfig& cfg, std::size_t length,
                           std::uint64_t link) {
  cfg.validate();
  if (length == 0) throw std::invalid_argument("generate_series: length must be >= 1");
  Stream rng(StreamKey{cfg.seed, link, 0});
  const double doppler_norm = cfg.doppler_hz / cfg.sample_rate_hz;
  std::vector<double> re(length, 0.0);
  std::vector<double> im(length, 0.0);
  add_component(re, doppler_norm, cfg.num_sinusoids, rng);
  add_component(im, doppler_norm, cfg.num_sinusoids, rng);

  double k = 0.0;
  if (const auto* r = std::get_if<Rician>(&cfg.distribution)) k = r->k_factor;
  const double sigma_h = std::sqrt(cfg.mean_power);
  // Each component above has variance 1/2, so re + j im has unit power.
  const double scatter = sigma_h * std::sqrt(1.0 / (k + 1.0));
  const ComplexGain los(sigma_h * std::sqrt(k / (k + 1.0)), 0.0);

  GainSeries series(length);
  for (std::size_t t = 0; t < length; ++t) {
    series[t] = los + scatter * ComplexGain(re[t], im[t]);
  }
  return series;
}

ComplexGain degrade_csi(ComplexGain h, const OutdatedCsiModel& model, Stream& rng) {
  model.validate();
  if (model.rho == 1.0) return model.sigma_outdated / model.sigma_actual * h;
  const ComplexGain eps = rng.complex_normal(1.0);
  return model.sigma_outdated *
         (model.rho / model.sigma_actual * h + eps * std::sqrt(1.0 - model.rho * model.rho));
}

double snr_from_gain(ComplexGain h, double power, double noise_var) {
  if (!(power > 0.0) || !(noise_var > 0.0)) {
    throw std::invalid_argument("snr_from_gain: power and noise variance must be positive");
  }
  return std::norm(h) * power / noise_var;
}

void write_series_csv(std::ostream& out, const GainSeries& series) {
  out << "index,re,im\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    fmt::print(out, "{},{:.17g},{:.17g}\n", i, series[i].real(), series[i].imag());
  }
}

GainSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("series csv: empty input");
  if (line.rfind("index,re,im", 0) != 0) throw std::runtime_error("series csv: bad header");
  GainSeries series;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string idx, re, im;
    if (!std::getline(ls, idx, ',') || !std::getline(ls, re, ',') || !std::getline(ls, im)) {
      throw std::runtime_error(fmt::format("series csv: malformed row {}", row + 1));
    }
    if (std::stoull(idx) != row) {
      throw std::runtime_error(fmt::format("series csv: index {} out of order", idx));
    }
    series.emplace_back(std::stod(re), std::stod(im));
    ++row;
  }
  return series;
}

void save_series_csv(const std::string& path, const GainSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_series_csv(out, series);
  if (!out) throw std::runtime_error("write failed: " + path);
}

GainSeries load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_series_csv(in);
}

double autocorrelation(const GainSeries& series, std::size_t lag) {
  if (lag >= series.size()) throw std::invalid_argument("autocorrelation: lag too large");
  ComplexGain acc = 0.0;
  for (std::size_t t = 0; t + lag < series.size(); ++t) acc += series[t + lag] * std::conj(series[t]);
  acc /= static_cast<double>(series.size() - lag);
  return acc.real() / mean_power(series);
}

double mean_power(const GainSeries& series) {
  if (series.empty()) throw std::invalid_argument("mean_power: empty series");
  double acc = 0.0;
  for (const auto& h : series) acc += std::norm(h);
  return acc / static_cast<double>(series.size());
}

}  // namespace prs::channel
