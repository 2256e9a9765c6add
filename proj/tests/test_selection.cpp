// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <doctest.h>

#include "prs/rng.hpp"
#include "prs/selection.hpp"

using namespace prs;
using namespace prs::selection;

TEST_CASE("rate thresholds") {
  const RateConfig r(1.0);
  CHECK(r.threshold() == 3.0);
  CHECK(r.direct_threshold() == 1.0);
  CHECK(RateConfig(2.0).threshold() == 15.0);
  CHECK_THROWS_AS(RateConfig(0.0), std::invalid_argument);
  CHECK(to_string(Scheme::Ors) == "ORS");
  CHECK(to_string(Scheme::Direct) == "DT");
}

TEST_CASE("decoding subset") {
  const RateConfig r(1.0);
  const std::vector<double> g{4.0, 2.0, 5.0};
  CHECK(decoding_subset(g, r) == std::vector<RelayId>{1, 3});
  const std::vector<double> low{1.0, 2.9, 0.0};
  CHECK(decoding_subset(low, r).empty());
  const std::vector<double> edge{3.0};
  CHECK(decoding_subset(edge, r) == std::vector<RelayId>{1});
}

TEST_CASE("decoding subset size is binomial") {
  constexpr int K = 8;
  constexpr int n = 1000000;
  const double gbar = 10.0;
  const RateConfig r(1.0);
  Stream rng({3, 0, 0});
  std::vector<int> counts(K + 1, 0);
  std::vector<double> g(K);
  for (int i = 0; i < n; ++i) {
    for (auto& x : g) x = rng.exponential(gbar);
    ++counts[decoding_subset(g, r).size()];
  }
  const double q = std::exp(-3.0 / gbar);
  for (int M = 0; M <= K; ++M) {
    const double p = boost::math::binomial_coefficient<double>(K, M) * std::pow(q, M) * std::pow(1 - q, K - M);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[M] / double(n) - p) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("best DF relay") {
  const std::vector<RelayId> ds{1, 2, 3};
  const std::vector<double> m{0.5, 2.0, 1.1};
  CHECK(select_best_df(ds, m) == 2);
  CHECK_FALSE(select_best_df({}, m).has_value());
  const std::vector<double> tie{1.0, 1.0, 0.2};
  CHECK(select_best_df(ds, tie) == 1);
  // Scaling the metric never changes the choice.
  std::vector<double> scaled(m);
  for (auto& x : scaled) x *= 37.5;
  CHECK(select_best_df(ds, scaled) == 2);
}

TEST_CASE("best DF relay equals brute force max with perfect metrics") {
  Stream rng({4, 0, 0});
  const RateConfig r(1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> sr(6), rd(6);
    for (auto& x : sr) x = rng.exponential(5.0);
    for (auto& x : rd) x = rng.exponential(5.0);
    const auto ds = decoding_subset(sr, r);
    const auto chosen = select_best_df(ds, rd);
    if (ds.empty()) {
      CHECK_FALSE(chosen.has_value());
      continue;
    }
    double best = -1.0;
    for (RelayId id : ds) best = std::max(best, rd[id - 1]);
    REQUIRE(chosen.has_value());
    CHECK(rd[*chosen - 1] == best);
  }
}

TEST_CASE("OSTC pair") {
  const std::vector<RelayId> ds{1, 2, 3};
  const std::vector<double> m{0.5, 2.0, 1.1};
  const auto p = select_ostc_pair(ds, m);
  CHECK(p.first == 2);
  CHECK(p.second == 3);
  const std::vector<RelayId> one{3};
  const auto s = select_ostc_pair(one, m);
  CHECK(s.first == 3);
  CHECK_FALSE(s.second.has_value());
  CHECK_FALSE(select_ostc_pair({}, m).first.has_value());
}

TEST_CASE("OSTC pair equals sort oracle") {
  Stream rng({5, 0, 0});
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> m(8);
    for (auto& x : m) x = rng.exponential(1.0);
    std::vector<RelayId> ds(8);
    std::iota(ds.begin(), ds.end(), 1);
    auto sorted = ds;
    std::sort(sorted.begin(), sorted.end(), [&](RelayId a, RelayId b) { return m[a - 1] > m[b - 1]; });
    const auto p = select_ostc_pair(ds, m);
    CHECK(p.first == sorted[0]);
    CHECK(p.second == sorted[1]);
  }
}

TEST_CASE("AF effective SNR") {
  CHECK(af_effective_snr(1.0, 1.0, false) == doctest::Approx(1.0 / 3.0));
  CHECK(af_effective_snr(1.0, 1.0, true) == 1.0);
  CHECK(af_effective_snr(1e9, 5.0, true) == 5.0);
  Stream rng({6, 0, 0});
  for (int i = 0; i < 1000000; ++i) {
    const double a = rng.exponential(10.0), b = rng.exponential(10.0);
    if (af_effective_snr(a, b, true) < af_effective_snr(a, b, false)) FAIL("bound below exact");
  }
  // For a fixed hop ratio the relative gap tends to g1 / (g1 + g2), not to 0.
  for (double g = 10.0; g <= 1e6; g *= 10.0) {
    const double gap = (af_effective_snr(g, 2 * g, true) - af_effective_snr(g, 2 * g, false)) / g;
    CHECK(gap == doctest::Approx(1.0 / 3.0 + 2.0 / (9.0 * g)).epsilon(1e-3));
  }
  // It vanishes when the stronger hop dominates.
  double prev = 1.0;
  for (double r = 10.0; r <= 1e7; r *= 10.0) {
    const double gap = (af_effective_snr(100.0, 100.0 * r, true) - af_effective_snr(100.0, 100.0 * r, false)) / 100.0;
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("best AF relay") {
  std::vector<RelayObservation> one{{1, {0.1}, {0.2}, {0.0}, {0.0}}};
  CHECK(select_best_af(one, true) == 1);
  std::vector<RelayObservation> two{{1, {0}, {0}, {3}, {1}}, {2, {0}, {0}, {2}, {2}}};
  CHECK(select_best_af(two, true) == 2);
  CHECK_THROWS_AS(select_best_af({}, true), std::invalid_argument);

  Stream rng({7, 0, 0});
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<RelayObservation> obs(5);
    double best = -1.0;
    for (int k = 0; k < 5; ++k) {
      obs[k].relay_id = k + 1;
      obs[k].sr_actual.value = rng.exponential(4.0);
      obs[k].rd_actual.value = rng.exponential(4.0);
      obs[k].sr_metric.value = rng.exponential(4.0);
      obs[k].rd_metric.value = rng.exponential(4.0);
      best = std::max(best, std::min(obs[k].sr_actual.value, obs[k].rd_actual.value));
    }
    const auto& c = obs[select_best_af(obs, false) - 1];
    CHECK(af_effective_snr(c.sr_actual.value, c.rd_actual.value, true) == best);
  }
}

TEST_CASE("OSTC effective SNR and direct transmission") {
  CHECK(ostc_effective_snr(4.0, 0.0) == 2.0);
  CHECK(ostc_effective_snr(3.5, 3.5) == 3.5);
  const RateConfig r(1.0);
  CHECK_FALSE(direct_transmission_outcome(1.0, r));
  CHECK(direct_transmission_outcome(0.0, r));
  CHECK(half_duplex_rate(3.0) == doctest::Approx(1.0));
  CHECK_FALSE(half_duplex_outage(3.0, r));
  CHECK(half_duplex_outage(2.999, r));

  Stream rng({8, 0, 0});
  constexpr int n = 200000;
  const double gbar = 2.0;
  int out = 0;
  for (int i = 0; i < n; ++i) out += direct_transmission_outcome(rng.exponential(gbar), r);
  const double p = 1.0 - std::exp(-1.0 / gbar);
  CHECK(std::abs(out / double(n) - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
}
