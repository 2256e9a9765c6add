// SPDX-License-Identifier: Apache-2.0
//
// Keyed random streams. A stream is fully determined by (seed, link, frame),
// so independent workers can derive their own generators without sharing
// state.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace prs {

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t link = 0;
  std::uint64_t frame = 0;
};

class Stream {
 public:
  explicit Stream(const StreamKey& key);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1], safe for log().
  double uniform_open();
  double uniform(double lo, double hi);
  double normal();
  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0);
  /// Exponential with the given mean.
  double exponential(double mean);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace prs
