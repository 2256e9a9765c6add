// SPDX-License-Identifier: Apache-2.0
//
// Closed-form outage probability and MGF-based ergodic capacity of
// predictive relay selection over i.i.d. Rayleigh links.

#pragma once

#include <functional>

#include "prs/numerics.hpp"

namespace prs::analytics {

inline constexpr int kMaxRelays = 16;
inline constexpr std::size_t kDefaultQuadratureOrder = 200;

/// DF network: K relays, per-hop average SNRs, selection correlation rho and
/// threshold gamma_o = 2^{2R} - 1.
struct DfParams {
  int K = 8;
  double gamma_sr = 1.0;
  double gamma_rd = 1.0;
  double rho = 1.0;
  double gamma_o = 3.0;

  /// Throws std::invalid_argument for bad sizes or SNRs and
  /// std::domain_error for rho outside [0, 1].
  void validate() const;
};

struct AfParams {
  int K = 8;
  double gamma_sr = 1.0;
  double gamma_rd = 1.0;
  double rho = 1.0;
  double gamma_o = 3.0;

  /// gamma_sr gamma_rd / (gamma_sr + gamma_rd), mean of the min-bound SNR.
  double gamma_e() const;
  void validate() const;
};

/// Density of the actual SNR given its predicted value (non-central chi-square,
/// two degrees of freedom). Requires 0 <= rho < 1.
double conditional_snr_pdf(double gamma, double gamma_check, double gamma_bar, double rho);

/// Probability that exactly M of K relays decode: C(K,M) q^M (1-q)^{K-M},
/// q = exp(-gamma_o / gamma_sr).
double prob_ds_size(int K, int M, double gamma_o, double gamma_sr);

/// P(gamma_sel < x) for the relay picked among M by its predicted rd SNR,
/// where gamma_sel is that relay's actual rd SNR.
double selected_snr_cdf(double x, int M, double gamma_rd, double rho);

double outage_df(const DfParams& p);
double outage_af(const AfParams& p);

/// MGF of the actual SNR of the best-predicted relay among M.
double mgf_df_best(double s, int M, double gamma_rd, double rho);
double mgf_df_best_derivative(double s, int M, double gamma_rd, double rho);

/// 1 / (1 + s gamma_bar).
double mgf_single(double s, double gamma_bar);

/// MGF of the actual min-bound SNR of the best-predicted AF relay among K.
double mgf_af_best(double s, int K, double gamma_e, double rho);
double mgf_af_best_derivative(double s, int K, double gamma_e, double rho);

/// (1/ln 2) sum_q w_q Phi(s_q) dM(s_q): E[log2(1 + gamma)] from the MGF derivative.
double mgf_capacity(const numerics::QuadratureRule& rule, const std::function<double(double)>& dmgf);

/// e^{1/g} E1(1/g) / ln 2, capacity of a link with exponential SNR of mean g.
double exponential_capacity(double gamma_bar);

/// The same capacity through the quadrature rule.
double exponential_capacity_quadrature(double gamma_bar, const numerics::QuadratureRule& rule);

/// DF ergodic capacity including the 1/2 half-duplex pre-log.
double capacity_df(const DfParams& p, const numerics::QuadratureRule& rule);

/// AF ergodic capacity. Without `half_duplex` no 1/2 pre-log is applied.
double capacity_af(const AfParams& p, const numerics::QuadratureRule& rule, bool half_duplex = false);

}  // namespace prs::analytics
