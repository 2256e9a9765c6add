// SPDX-License-Identifier: Apache-2.0

#include "prs/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace prs::numerics {

namespace {

// Below this the power series is used; above it the Hankel expansion.
// At |x| = 17 the largest series term is ~5e5, so cancellation costs
// under 1e-10 absolute.
constexpr double kJ0SeriesLimit = 17.0;
constexpr double kI0SeriesLimit = 30.0;

double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 200; ++m) {
    term *= -q / (static_cast<double>(m) * m);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && std::abs(term) < 1e-20) break;
  }
  return sum;
}

// J0(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - pi/4.
double j0_asymptotic(double x) {
  const double z = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  // term_k = prod_{j<=k} (2j-1)^2 / (j z); even k feed P, odd k feed Q.
  for (int k = 1; k < 60; ++k) {
    const double a = 2.0 * k - 1.0;
    const double next = term * a * a / (k * z);
    if (std::abs(next) > prev) break;  // asymptotic series started to diverge
    prev = std::abs(next);
    term = next;
    switch (k % 4) {
      case 1: q -= term; break;
      case 2: p -= term; break;
      case 3: q += term; break;
      case 0: p += term; break;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - 0.25 * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

double i0_series_scaled(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<double>(m) * m);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum * std::exp(-x);
}

// e^{-x} I0(x) ~ 1/sqrt(2 pi x) sum_k prod_{j<=k}(2j-1)^2 / (k! (8x)^k).
double i0_asymptotic_scaled(double x) {
  const double z = 8.0 * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double a = 2.0 * k - 1.0;
    const double next = term * a * a / (k * z);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

// E1 by its convergent series, used for 0 < x <= 1.
double e1_series(double x) {
  double sum = 0.0;
  double term = 1.0;  // x^k / k!
  for (int k = 1; k < 100; ++k) {
    term *= x / k;
    const double contrib = term / k;
    sum += (k % 2 == 1) ? contrib : -contrib;
    if (contrib < 1e-18) break;
  }
  return -kEulerGamma - std::log(x) + sum;
}

// e^x E1(x) by the continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...))),
// evaluated with the modified Lentz method. Converges quickly for x > 1.
double e1_continued_fraction_scaled(double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double bessel_j0(double x) {
  const double ax = std::abs(x);
  return ax <= kJ0SeriesLimit ? j0_series(ax) : j0_asymptotic(ax);
}

double bessel_i0_scaled(double x) {
  if (x < 0.0) throw std::domain_error("bessel_i0_scaled: negative argument");
  return x <= kI0SeriesLimit ? i0_series_scaled(x) : i0_asymptotic_scaled(x);
}

double bessel_i0(double x) {
  const double scaled = bessel_i0_scaled(x);
  const double log_value = x + std::log(scaled);
  if (log_value >= std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("bessel_i0: result overflows; use bessel_i0_scaled");
  }
  return std::exp(log_value);
}

double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: argument must be positive");
  if (x <= 1.0) return e1_series(x);
  return e1_continued_fraction_scaled(x) * std::exp(-x);
}

double exp_integral_e1_scaled(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_integral_e1_scaled: argument must be positive");
  if (x <= 1.0) return e1_series(x) * std::exp(x);
  return e1_continued_fraction_scaled(x);
}

double phi(double s) {
  if (!(s > 0.0)) throw std::domain_error("phi: argument must be positive");
  return -exp_integral_e1(s);
}

QuadratureRule gauss_chebyshev(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_chebyshev: order must be >= 1");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double q_count = static_cast<double>(order);
  for (std::size_t q = 1; q <= order; ++q) {
    const double theta = (static_cast<double>(q) - 0.5) * kPi / q_count;
    const double angle = 0.25 * kPi * std::cos(theta) + 0.25 * kPi;
    const double cos_angle = std::cos(angle);
    rule.nodes[q - 1] = std::tan(angle);
    rule.weights[q - 1] = kPi * kPi * std::sin(theta) / (4.0 * q_count * cos_angle * cos_angle);
  }
  return rule;
}

}  // namespace prs::numerics
