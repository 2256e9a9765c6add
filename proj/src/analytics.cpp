// SPDX-License-Identifier: Apache-2.0

#include "prs/analytics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace prs::analytics {

namespace {

// The outage expressions are alternating binomial sums whose result can be
// 1e-18 while individual terms are O(100). 50 decimal digits keep the
// cancellation exact to well below double resolution.
using Wide = boost::multiprecision::cpp_bin_float_50;

void check_relays(int K) {
  if (K < 1 || K > kMaxRelays) throw std::invalid_argument("relay count must be in [1, 16]");
}

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("rho must lie in [0, 1]");
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double clamp_probability(const Wide& v) {
  const double d = static_cast<double>(v);
  if (d < 0.0) return 0.0;
  if (d > 1.0) return 1.0;
  return d;
}

// P(gamma_sel < x) in wide precision; x is gamma_o / gamma_rd.
Wide selected_cdf_wide(const Wide& x, int M, double rho) {
  const Wide delta = 1 - Wide(rho) * Wide(rho);
  Wide sum = 0;
  for (int m = 0; m < M; ++m) {
    const Wide coeff = Wide(M) * binomial(M - 1, m) / (m + 1);
    const Wide rate = Wide(m + 1) / (1 + m * delta);
    const Wide term = coeff * (1 - exp(-x * rate));
    sum += (m % 2 == 0) ? term : -term;
  }
  return sum;
}

}  // namespace

void DfParams::validate() const {
  check_relays(K);
  check_positive(gamma_sr, "gamma_sr");
  check_positive(gamma_rd, "gamma_rd");
  check_positive(gamma_o, "gamma_o");
  check_rho(rho);
}

double AfParams::gamma_e() const { return gamma_sr * gamma_rd / (gamma_sr + gamma_rd); }

void AfParams::validate() const {
  check_relays(K);
  check_positive(gamma_sr, "gamma_sr");
  check_positive(gamma_rd, "gamma_rd");
  check_positive(gamma_o, "gamma_o");
  check_rho(rho);
}

double conditional_snr_pdf(double gamma, double gamma_check, double gamma_bar, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("conditional_snr_pdf: need 0 <= rho < 1");
  if (gamma < 0.0 || gamma_check < 0.0) throw std::domain_error("conditional_snr_pdf: negative SNR");
  check_positive(gamma_bar, "gamma_bar");
  const double scale = gamma_bar * (1.0 - rho * rho);
  const double z = 2.0 * rho * std::sqrt(gamma * gamma_check) / scale;
  // exp(-(g + rho^2 gc)/scale) I0(z) = exp(-(g + rho^2 gc)/scale + z) I0s(z)
  const double exponent = -(gamma + rho * rho * gamma_check) / scale + z;
  return std::exp(exponent) * numerics::bessel_i0_scaled(z) / scale;
}

double prob_ds_size(int K, int M, double gamma_o, double gamma_sr) {
  check_relays(K);
  if (M < 0 || M > K) throw std::invalid_argument("prob_ds_size: need 0 <= M <= K");
  check_positive(gamma_sr, "gamma_sr");
  const double q = std::exp(-gamma_o / gamma_sr);
  return binomial(K, M) * std::pow(q, M) * std::pow(-std::expm1(-gamma_o / gamma_sr), K - M);
}

double selected_snr_cdf(double x, int M, double gamma_rd, double rho) {
  check_relays(M);
  check_rho(rho);
  check_positive(gamma_rd, "gamma_rd");
  if (x <= 0.0) return 0.0;
  return clamp_probability(selected_cdf_wide(Wide(x) / gamma_rd, M, rho));
}

double outage_df(const DfParams& p) {
  p.validate();
  const Wide q = exp(-Wide(p.gamma_o) / p.gamma_sr);
  const Wide x = Wide(p.gamma_o) / p.gamma_rd;
  Wide total = pow(1 - q, p.K);
  for (int M = 1; M <= p.K; ++M) {
    const Wide weight = Wide(binomial(p.K, M)) * pow(q, M) * pow(1 - q, p.K - M);
    total += weight * selected_cdf_wide(x, M, p.rho);
  }
  return clamp_probability(total);
}

double outage_af(const AfParams& p) {
  p.validate();
  const Wide x = Wide(p.gamma_o) / p.gamma_e();
  const Wide rho2 = Wide(p.rho) * Wide(p.rho);
  Wide total = 0;
  for (int k = 1; k <= p.K; ++k) {
    const Wide b = k * (1 - rho2) + rho2;
    const Wide term = Wide(binomial(p.K, k)) * (1 - exp(-k * x / b));
    total += (k % 2 == 1) ? term : -term;
  }
  return clamp_probability(total);
}

double mgf_df_best(double s, int M, double gamma_rd, double rho) {
  check_relays(M);
  check_rho(rho);
  const double delta = 1.0 - rho * rho;
  long double sum = 0.0L;
  for (int m = 0; m < M; ++m) {
    const long double a = gamma_rd * (1.0 + m * delta);
    const long double term = M * binomial(M - 1, m) / (m + 1.0L + s * a);
    sum += (m % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

double mgf_df_best_derivative(double s, int M, double gamma_rd, double rho) {
  check_relays(M);
  check_rho(rho);
  const double delta = 1.0 - rho * rho;
  long double sum = 0.0L;
  for (int m = 0; m < M; ++m) {
    const long double a = gamma_rd * (1.0 + m * delta);
    const long double den = m + 1.0L + s * a;
    const long double term = M * binomial(M - 1, m) * a / (den * den);
    sum += (m % 2 == 0) ? -term : term;
  }
  return static_cast<double>(sum);
}

double mgf_single(double s, double gamma_bar) { return 1.0 / (1.0 + s * gamma_bar); }

double mgf_af_best(double s, int K, double gamma_e, double rho) {
  check_relays(K);
  check_rho(rho);
  const double rho2 = rho * rho;
  long double sum = 0.0L;
  for (int k = 1; k <= K; ++k) {
    const long double b = k * (1.0 - rho2) + rho2;
    const long double term = binomial(K, k) * k / (k + s * gamma_e * b);
    sum += (k % 2 == 1) ? term : -term;
  }
  return static_cast<double>(sum);
}

double mgf_af_best_derivative(double s, int K, double gamma_e, double rho) {
  check_relays(K);
  check_rho(rho);
  const double rho2 = rho * rho;
  long double sum = 0.0L;
  for (int k = 1; k <= K; ++k) {
    const long double b = k * (1.0 - rho2) + rho2;
    const long double den = k + s * gamma_e * b;
    const long double term = binomial(K, k) * k * gamma_e * b / (den * den);
    sum += (k % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

double mgf_capacity(const numerics::QuadratureRule& rule, const std::function<double(double)>& dmgf) {
  long double sum = 0.0L;
  for (std::size_t q = 0; q < rule.order; ++q) {
    sum += static_cast<long double>(rule.weights[q]) * numerics::phi(rule.nodes[q]) * dmgf(rule.nodes[q]);
  }
  return static_cast<double>(sum / numerics::kLn2);
}

double exponential_capacity(double gamma_bar) {
  check_positive(gamma_bar, "gamma_bar");
  return numerics::exp_integral_e1_scaled(1.0 / gamma_bar) / numerics::kLn2;
}

double exponential_capacity_quadrature(double gamma_bar, const numerics::QuadratureRule& rule) {
  check_positive(gamma_bar, "gamma_bar");
  return mgf_capacity(rule, [gamma_bar](double s) {
    const double den = 1.0 + s * gamma_bar;
    return -gamma_bar / (den * den);
  });
}

double capacity_df(const DfParams& p, const numerics::QuadratureRule& rule) {
  p.validate();
  std::vector<double> phi(rule.order);
  for (std::size_t q = 0; q < rule.order; ++q) phi[q] = numerics::phi(rule.nodes[q]);
  long double total = 0.0L;
  for (int M = 1; M <= p.K; ++M) {
    const double weight = prob_ds_size(p.K, M, p.gamma_o, p.gamma_sr);
    if (weight == 0.0) continue;
    long double inner = 0.0L;
    for (std::size_t q = 0; q < rule.order; ++q) {
      inner += static_cast<long double>(rule.weights[q]) * phi[q] *
               mgf_df_best_derivative(rule.nodes[q], M, p.gamma_rd, p.rho);
    }
    total += weight * inner;
  }
  return static_cast<double>(total / (2.0L * numerics::kLn2));
}

double capacity_af(const AfParams& p, const numerics::QuadratureRule& rule, bool half_duplex) {
  p.validate();
  const double ge = p.gamma_e();
  const double c = mgf_capacity(rule, [&](double s) { return mgf_af_best_derivative(s, p.K, ge, p.rho); });
  return half_duplex ? 0.5 * c : c;
}

}  // namespace prs::analytics
