// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <doctest.h>

#include "prs/numerics.hpp"

using namespace prs::numerics;

TEST_CASE("j0 matches boost over the whole argument range") {
  for (double x = 0.0; x <= 80.0; x += 0.173) {
    CHECK(std::abs(bessel_j0(x) - boost::math::cyl_bessel_j(0, x)) < 1e-10);
  }
  CHECK(bessel_j0(-3.0) == bessel_j0(3.0));
  CHECK(bessel_j0(0.0) == 1.0);
}

TEST_CASE("j0 anchors for 2 and 3 ms at 100 Hz") {
  CHECK(std::abs(bessel_j0(0.4 * kPi) - 0.6425) < 5e-4);
  CHECK(std::abs(bessel_j0(0.6 * kPi) - 0.2906) < 5e-4);
}

TEST_CASE("i0 and its scaled form match boost") {
  for (double x = 0.0; x <= 700.0; x += x < 40 ? 0.37 : 11.3) {
    const double ref = boost::math::cyl_bessel_i(0, x);
    CHECK(bessel_i0(x) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(bessel_i0_scaled(x) == doctest::Approx(ref * std::exp(-x)).epsilon(1e-12));
  }
  CHECK(bessel_i0_scaled(1e6) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi * 1e6)).epsilon(1e-6));
  CHECK_THROWS_AS(bessel_i0(-1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i0(1000.0), std::overflow_error);
}

TEST_CASE("e1 and its scaled form match boost") {
  for (double x = 1e-6; x <= 600.0; x *= 1.31) {
    const double ref = boost::math::expint(1, x);
    CHECK(exp_integral_e1(x) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(exp_integral_e1_scaled(x) == doctest::Approx(ref * std::exp(x)).epsilon(1e-12));
    CHECK(phi(x) == -exp_integral_e1(x));
  }
  CHECK(std::abs(exp_integral_e1(1.0) - 0.21938) < 1e-5);
  CHECK_THROWS_AS(exp_integral_e1(0.0), std::domain_error);
  CHECK_THROWS_AS(exp_integral_e1_scaled(-1.0), std::domain_error);
  // e^x E1(x) ~ 1/x for large x.
  CHECK(exp_integral_e1_scaled(1e8) == doctest::Approx(1e-8).epsilon(1e-7));
}

TEST_CASE("gauss-chebyshev rule") {
  CHECK_THROWS_AS(gauss_chebyshev(0), std::invalid_argument);
  const auto rule = gauss_chebyshev(200);
  REQUIRE(rule.nodes.size() == 200);
  REQUIRE(rule.weights.size() == 200);
  for (std::size_t q = 0; q < 200; ++q) {
    CHECK(rule.nodes[q] > 0.0);
    CHECK(rule.weights[q] > 0.0);
  }
  // int_0^inf ds / (1 + s)^2 = 1.
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.order; ++q) sum += rule.weights[q] / std::pow(1.0 + rule.nodes[q], 2);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-3));
}
