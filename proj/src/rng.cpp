// SPDX-License-Identifier: Apache-2.0

#include "prs/rng.hpp"

#include <cmath>

namespace prs {

namespace {

std::mt19937_64 make_engine(const StreamKey& key) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(key.seed), hi(key.seed), lo(key.link), hi(key.link),
                    lo(key.frame), hi(key.frame), 0x70727373u};
  return std::mt19937_64(seq);
}

}  // namespace

Stream::Stream(const StreamKey& key) : engine_(make_engine(key)) {}

double Stream::uniform() { return uniform_(engine_); }

double Stream::uniform_open() { return 1.0 - uniform_(engine_); }

double Stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

double Stream::normal() { return normal_(engine_); }

std::complex<double> Stream::complex_normal(double variance) {
  const double s = std::sqrt(0.5 * variance);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

double Stream::exponential(double mean) { return -mean * std::log(uniform_open()); }

}  // namespace prs
