// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "gradcheck.hpp"
#include "prs/channel.hpp"
#include "prs/predictor.hpp"
#include "prs/rng.hpp"

using namespace prs;
using namespace prs::predictor;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

}  // namespace

TEST_CASE("layer kinds and stack construction") {
  CHECK(parse_layer_kind("lstm") == LayerKind::Lstm);
  CHECK(to_string(LayerKind::Gru) == "gru");
  CHECK_THROWS_AS(parse_layer_kind("cnn"), std::invalid_argument);
  CHECK(gate_multiplier(LayerKind::Rnn) == 1);
  CHECK(gate_multiplier(LayerKind::Gru) == 3);
  CHECK(gate_multiplier(LayerKind::Lstm) == 4);
  CHECK(parameter_count({LayerKind::Lstm, 3, 5}) == 4 * 5 * (3 + 5 + 1));
  CHECK(parameter_count({LayerKind::DenseTanh, 3, 5}) == 5 * (3 + 1));
  const auto stack = make_stack(LayerKind::Lstm, 40, {25, 25}, 8);
  REQUIRE(stack.size() == 4);
  CHECK(stack[0].kind == LayerKind::DenseTanh);
  CHECK(stack[1].kind == LayerKind::Lstm);
  CHECK(stack[3].output_dim == 8);
  CHECK_THROWS_AS(RecurrentNet({{LayerKind::DenseTanh, 3, 4}, {LayerKind::Lstm, 5, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(make_stack(LayerKind::DenseTanh, 3, {4}, 2), std::invalid_argument);
}

TEST_CASE("all-zero LSTM stack outputs zero") {
  RecurrentNet net(make_stack(LayerKind::Lstm, 6, {4, 3}, 2));
  net.params().setZero();
  for (int t = 0; t < 5; ++t) CHECK(net.forward(vec({1, -2, 3, 0.5, 7, -1})).isZero());
  CHECK_THROWS_AS(net.forward(vec({1, 2})), std::invalid_argument);
}

TEST_CASE("all-zero GRU layer halves its state") {
  RecurrentNet net({{LayerKind::Gru, 1, 1}});
  net.params().setConstant(0.8);
  const double s1 = net.forward(vec({1.0}))[0];
  REQUIRE(s1 != 0.0);
  net.params().setZero();
  const double s2 = net.forward(vec({0.0}))[0];
  CHECK(s2 == doctest::Approx(0.5 * s1).epsilon(1e-15));
  CHECK(net.forward(vec({0.0}))[0] == doctest::Approx(0.25 * s1).epsilon(1e-15));
}

TEST_CASE("forward is deterministic from the reset state and bounded") {
  for (auto kind : {LayerKind::Rnn, LayerKind::Lstm, LayerKind::Gru}) {
    RecurrentNet net(make_stack(kind, 4, {5, 3}, 2));
    net.initialize(3);
    std::vector<Vector> first;
    Stream rng({9, 0, 0});
    std::vector<Vector> xs(20, Vector(4));
    for (auto& x : xs) {
      for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-3.0, 3.0);
    }
    for (const auto& x : xs) first.push_back(net.forward(x));
    net.reset_state();
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const Vector y = net.forward(xs[t]);
      CHECK(y == first[t]);
      CHECK(y.cwiseAbs().maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("BPTT matches central differences") {
  for (auto kind : {LayerKind::Rnn, LayerKind::Lstm, LayerKind::Gru}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto r = testing::gradient_check(RecurrentNet(make_stack(kind, 3, {4, 5}, 2)), seed, 7);
      CHECK(r.passed == r.checked);
      CHECK(r.worst <= 1e-4);
    }
    // A 3-neuron single recurrent layer.
    const auto small = testing::gradient_check(RecurrentNet(make_stack(kind, 2, {3}, 1)), 11, 5);
    CHECK(small.passed == small.checked);
  }
  // Mixed GRU-then-LSTM stack.
  const RecurrentNet mixed({{LayerKind::DenseTanh, 3, 4},
                            {LayerKind::Gru, 4, 4},
                            {LayerKind::Lstm, 4, 3},
                            {LayerKind::DenseTanh, 3, 2}});
  const auto r = testing::gradient_check(mixed, 5, 6);
  CHECK(r.passed == r.checked);
}

TEST_CASE("BPTT trivial cases") {
  RecurrentNet net(make_stack(LayerKind::Lstm, 3, {4}, 2));
  net.params().setZero();
  const std::vector<Vector> xs(4, Vector::Zero(3)), ys(4, Vector::Zero(2));
  Vector grad;
  CHECK(backward_bptt(net, xs, ys, grad) == 0.0);
  CHECK(grad.isZero());

  net.initialize(4);
  std::vector<Vector> xr(4, vec({0.3, -0.2, 0.9})), yr(4, vec({0.1, -0.5}));
  Vector g1, g2;
  const double l1 = backward_bptt(net, xr, yr, g1, 1.0);
  const double l2 = backward_bptt(net, xr, yr, g2, 2.0);
  CHECK(l2 == doctest::Approx(2.0 * l1));
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sequence_loss(net, xr, yr) == doctest::Approx(l1));

  std::vector<Vector> short_y(3, vec({0.0, 0.0}));
  CHECK_THROWS_AS(backward_bptt(net, xr, short_y, g1), std::invalid_argument);
}

TEST_CASE("adam") {
  Vector params = vec({1.0, -2.0, 3.0});
  const Vector before = params;
  AdamState state(3);
  adam_step(state, AdamConfig{}, Vector::Zero(3), params);
  CHECK(params == before);

  // Constant gradient: each step moves by lr (m_hat / sqrt(v_hat) -> sign).
  AdamState s2(1);
  Vector p = vec({0.0});
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  double last = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double prev = p[0];
    adam_step(s2, cfg, vec({0.37}), p);
    last = prev - p[0];
  }
  CHECK(last == doctest::Approx(cfg.lr).epsilon(1e-6));
  CHECK_THROWS_AS(adam_step(s2, cfg, vec({1.0, 2.0}), p), std::invalid_argument);
}

TEST_CASE("tapped delay line") {
  TappedDelayLine mag(8, 4, InputMode::Magnitude);
  TappedDelayLine cpx(8, 4, InputMode::Complex);
  CHECK(mag.dim() == 40);
  CHECK(cpx.dim() == 80);
  CHECK_THROWS_AS(mag.build_input_vector(), std::logic_error);

  TappedDelayLine now(3, 0, InputMode::Magnitude);
  const std::vector<channel::ComplexGain> snap{{3, 4}, {0, -2}, {1, 0}};
  now.push(snap);
  CHECK(now.build_input_vector() == vec({5, 2, 1}));

  // Oldest slot first, [Re..., Im...] per slot.
  TappedDelayLine two(2, 1, InputMode::Complex);
  two.push(std::vector<channel::ComplexGain>{{1, 2}, {3, 4}});
  two.push(std::vector<channel::ComplexGain>{{5, 6}, {7, 8}});
  CHECK(two.build_input_vector() == vec({1, 3, 2, 4, 5, 7, 6, 8}));
  CHECK(two.build_input_vector(0.5) == vec({0.5, 1.5, 1, 2, 2.5, 3.5, 3, 4}));
  two.push(std::vector<channel::ComplexGain>{{0, 0}, {0, 0}});
  CHECK(two.build_input_vector().head(4) == vec({5, 7, 6, 8}));
  CHECK_THROWS_AS(two.push(snap), std::invalid_argument);
}

TEST_CASE("FLOPS model") {
  const auto lstm = make_stack(LayerKind::Lstm, 40, {25, 25}, 8);
  CHECK(flops_per_step(lstm) == 25400);
  CHECK(flops_simplified(LayerKind::Lstm, 2, 25) == 22500);
  CHECK(flops_simplified(LayerKind::Gru, 2, 25) == 4 * (1 + 3 * 2) * 625);
  CHECK(flops_simplified(LayerKind::Rnn, 2, 25) == 4 * (1 + 2) * 625);
  CHECK(flops_per_step(make_stack(LayerKind::Rnn, 40, {25, 25}, 8)) < 25400);
  CHECK(static_cast<double>(flops_per_step(lstm)) * 1000.0 / 1e6 == doctest::Approx(25.4));
  // Exact equals the simplified count only when N_i = N_o = n.
  CHECK(flops_per_step(make_stack(LayerKind::Lstm, 25, {25, 25}, 25)) == 22500);
  CHECK_THROWS_AS(flops_simplified(LayerKind::DenseTanh, 2, 25), std::invalid_argument);
}

TEST_CASE("model save and load round trip") {
  PredictorModel model{RecurrentNet(make_stack(LayerKind::Gru, 10, {6, 5}, 2)), 1, 4, 3, InputMode::Complex, 0.5};
  model.net.initialize(8);
  std::stringstream io;
  save_model(io, model);
  auto back = load_model(io);
  CHECK(back.net.params() == model.net.params());
  CHECK(back.tau == 4);
  CHECK(back.horizon == 3);
  CHECK(back.scale == 0.5);
  CHECK(back.mode == InputMode::Complex);
  REQUIRE(back.net.layers().size() == 4);
  CHECK(back.net.layers()[1].kind == LayerKind::Gru);

  std::stringstream bad("not-a-model 1\n");
  CHECK_THROWS_AS(load_model(bad), std::runtime_error);
  std::stringstream truncated(io.str().substr(0, io.str().size() / 2));
  CHECK_THROWS(load_model(truncated));
}

TEST_CASE("correlation helpers") {
  channel::FadingProcessConfig cfg;
  const std::vector<channel::GainSeries> truth{channel::generate_series(cfg, 2000, 1)};
  CHECK(complex_correlation(truth, truth, 0) == doctest::Approx(1.0));
  CHECK(magnitude_correlation(truth, truth, 0) == doctest::Approx(1.0));
}

TEST_CASE("untrained net is uncorrelated with shuffled targets") {
  channel::FadingProcessConfig cfg;
  cfg.seed = 4;
  const std::vector<channel::GainSeries> series{channel::generate_series(cfg, 10000 + 7, 0)};
  PredictorModel model{RecurrentNet(make_stack(LayerKind::Lstm, 10, {25, 25}, 2)), 1, 4, 3, InputMode::Complex, 0.5};
  model.net.initialize(5);
  const auto res = predict_series(model, series);
  std::vector<channel::GainSeries> shuffled = series;
  Stream rng({6, 0, 0});
  std::shuffle(shuffled[0].begin() + static_cast<long>(res.first_valid), shuffled[0].end(), rng.engine());
  CHECK(std::abs(complex_correlation(res.predicted, shuffled, res.first_valid)) < 0.1);

  const std::vector<channel::GainSeries> tiny{channel::GainSeries(7)};
  CHECK_THROWS_AS(predict_series(model, tiny), std::invalid_argument);
}

TEST_CASE("training reduces the loss and is reproducible") {
  channel::FadingProcessConfig cfg;
  cfg.seed = 12;
  const std::vector<channel::GainSeries> series{channel::generate_series(cfg, 8000, 0)};
  TrainConfig tc;
  TrainReport a, b;
  const auto m1 = train_predictor(series, tc, &a);
  const auto m2 = train_predictor(series, tc, &b);
  REQUIRE(a.epoch_mse.size() == 10);
  CHECK(a.epoch_mse.back() < a.epoch_mse.front());
  CHECK(m1.net.params() == m2.net.params());
  CHECK(a.rho >= 0.9);

  TrainConfig bad = tc;
  bad.train_len = 8000;
  CHECK_THROWS_AS(train_predictor(series, bad), std::invalid_argument);

  TrainConfig smoke = tc;
  smoke.epochs = 1;
  smoke.train_len = 100;
  TrainReport r;
  const std::vector<channel::GainSeries> small{channel::generate_series(cfg, 200, 1)};
  CHECK_NOTHROW(train_predictor(small, smoke, &r));
  CHECK(r.epoch_mse.size() == 1);
}
