// SPDX-License-Identifier: Apache-2.0
//
// Fading time series (Jakes sum of sinusoids, Rayleigh or Rician), the
// outdated-CSI model and SNR bookkeeping.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "prs/rng.hpp"

namespace prs::channel {

using ComplexGain = std::complex<double>;
using GainSeries = std::vector<ComplexGain>;

struct Rayleigh {};
struct Rician {
  double k_factor = 0.0;
};
using FadingDistribution = std::variant<Rayleigh, Rician>;

struct FadingProcessConfig {
  double doppler_hz = 100.0;
  double sample_rate_hz = 1000.0;
  FadingDistribution distribution = Rayleigh{};
  double mean_power = 1.0;
  std::size_t num_sinusoids = 64;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

struct OutdatedCsiModel {
  double rho = 1.0;
  double sigma_outdated = 1.0;
  double sigma_actual = 1.0;

  void validate() const;
};

struct LinkSnr {
  double instantaneous = 0.0;
  double average = 1.0;
};

/// J0(2 pi f_d tau).
double jakes_correlation(double doppler_hz, double tau_s);

/// Sum-of-sinusoids fading process for one link. Different `link` values give
/// independent processes under the same config seed.
GainSeries generate_series(const FadingProcessConfig& cfg, std::size_t length,
                           std::uint64_t link = 0);

/// h_hat = sigma_hat (rho/sigma_h h + eps sqrt(1-rho^2)), eps ~ CN(0,1).
ComplexGain degrade_csi(ComplexGain h, const OutdatedCsiModel& model, Stream& rng);

/// |h|^2 P / sigma_n^2.
double snr_from_gain(ComplexGain h, double power, double noise_var);

/// CSV with header "index,re,im".
void write_series_csv(std::ostream& out, const GainSeries& series);
GainSeries read_series_csv(std::istream& in);
void save_series_csv(const std::string& path, const GainSeries& series);
GainSeries load_series_csv(const std::string& path);

/// Sample autocorrelation E[h[t+m] conj(h[t])] / E|h|^2, real part.
double autocorrelation(const GainSeries& series, std::size_t lag);

/// Mean of |h|^2.
double mean_power(const GainSeries& series);

}  // namespace prs::channel
