// SPDX-License-Identifier: Apache-2.0
//
// Special functions and quadrature used by the closed-form analysis.

#pragma once

#include <cstddef>
#include <vector>

namespace prs::numerics {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Bessel function of the first kind, order zero.
double bessel_j0(double x);

/// Modified Bessel function of the first kind, order zero.
/// Throws std::domain_error for x < 0 and std::overflow_error when the
/// result is not representable; use bessel_i0_scaled() for large arguments.
double bessel_i0(double x);

/// e^{-x} I0(x), finite for every x >= 0.
double bessel_i0_scaled(double x);

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt, x > 0.
double exp_integral_e1(double x);

/// e^{x} E1(x), x > 0. Stays finite where E1 underflows.
double exp_integral_e1_scaled(double x);

/// Kernel of the MGF capacity integral: Phi(s) = -E1(s), s > 0.
///
/// This is the single Meijer-G instance -G^{0,2}_{2,1}[1,1;0 | 1/s] the
/// capacity formula needs. Its Laplace transform is -ln(1+g)/g, which is
/// exactly what turns int M'(s) Phi(s) ds into E[ln(1+gamma)].
double phi(double s);

/// Gauss-Chebyshev rule mapped onto (0, inf) through s = tan(phi).
struct QuadratureRule {
  std::size_t order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes s_q = tan(pi/4 cos((q-0.5)pi/Q) + pi/4) and the matching weights,
/// q = 1..Q. Throws std::invalid_argument for Q == 0.
QuadratureRule gauss_chebyshev(std::size_t order);

}  // namespace prs::numerics
