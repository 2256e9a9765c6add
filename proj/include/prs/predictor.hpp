// SPDX-License-Identifier: Apache-2.0
//
// Recurrent-network channel predictor: dense/RNN/LSTM/GRU layers, BPTT,
// Adam, the tapped-delay-line input encoding and the FLOPS model.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prs/channel.hpp"

namespace prs::predictor {

using Vector = Eigen::VectorXd;

enum class LayerKind { DenseTanh, Rnn, Lstm, Gru };
std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::DenseTanh;
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
};

/// Number of gate blocks sharing the (W, U, b) layout: RNN 1, GRU 3, LSTM 4.
std::size_t gate_multiplier(LayerKind kind);
std::size_t parameter_count(const LayerSpec& spec);

/// Dense(in -> h1), recurrent layers h1 -> h1 -> h2 ..., Dense(hL -> out).
std::vector<LayerSpec> make_stack(LayerKind recurrent, std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden, std::size_t output_dim);

class RecurrentNet {
 public:
  explicit RecurrentNet(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().input_dim; }
  std::size_t output_dim() const { return layers_.back().output_dim; }

  /// Flat parameter vector; each layer stores W, U, b (column-major), with
  /// gate blocks stacked i, o, f, g for LSTM and z, r, s for GRU.
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  std::size_t param_offset(std::size_t layer) const { return offsets_[layer]; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in the column
  /// count of each matrix; biases use the layer input dimension.
  void initialize(std::uint64_t seed);

  void reset_state();

  /// One time step. Advances the hidden states.
  Vector forward(const Vector& input);

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  Vector params_;
  std::vector<Vector> s_;
  std::vector<Vector> c_;
};

/// MSE over a sequence from the zero state: (scale/T) sum_t |y_t - target_t|^2.
/// Writes d(loss)/d(params) into `grad` and returns the loss.
double backward_bptt(const RecurrentNet& net, std::span<const Vector> inputs,
                     std::span<const Vector> targets, Vector& grad, double loss_scale = 1.0);

/// Sequence loss only, same convention as backward_bptt.
double sequence_loss(const RecurrentNet& net, std::span<const Vector> inputs,
                     std::span<const Vector> targets, double loss_scale = 1.0);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
  explicit AdamState(std::size_t n) : m(Vector::Zero(static_cast<Eigen::Index>(n))), v(m) {}
};

void adam_step(AdamState& state, const AdamConfig& cfg, const Vector& grad, Vector& params);

enum class InputMode { Magnitude, Complex };
std::string_view to_string(InputMode mode);
InputMode parse_input_mode(std::string_view name);

/// Ring buffer of the last tau+1 snapshots of K links.
class TappedDelayLine {
 public:
  TappedDelayLine(std::size_t links, std::size_t depth, InputMode mode);

  void push(std::span<const channel::ComplexGain> snapshot);
  void clear() { history_.clear(); }
  bool filled() const { return history_.size() == depth_ + 1; }
  std::size_t links() const { return links_; }
  std::size_t depth() const { return depth_; }
  InputMode mode() const { return mode_; }
  std::size_t dim() const;

  /// Oldest slot first. Magnitude: |h_1..h_K| per slot. Complex:
  /// [Re h_1..Re h_K, Im h_1..Im h_K] per slot. Throws std::logic_error when
  /// fewer than tau+1 snapshots were pushed.
  Vector build_input_vector(double scale = 1.0) const;

 private:
  std::size_t links_;
  std::size_t depth_;
  InputMode mode_;
  std::deque<std::vector<channel::ComplexGain>> history_;
};

/// Exact per-step operation count (dense in, recurrent stack, dense out).
/// The first recurrent layer counts its input width as the network input width.
std::uint64_t flops_per_step(std::span<const LayerSpec> layers);
/// 4(1 + mult L) n^2.
std::uint64_t flops_simplified(LayerKind kind, std::size_t L, std::size_t n);

/// A trained predictor plus the encoding it expects.
struct PredictorModel {
  RecurrentNet net;
  std::size_t links = 1;
  std::size_t tau = 4;
  std::size_t horizon = 3;
  InputMode mode = InputMode::Complex;
  double scale = 0.5;
};

void save_model(std::ostream& out, const PredictorModel& model);
PredictorModel load_model(std::istream& in);
void save_model_file(const std::string& path, const PredictorModel& model);
PredictorModel load_model_file(const std::string& path);

struct TrainConfig {
  AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  std::size_t train_len = 5000;
  std::size_t horizon = 3;
  std::size_t tau = 4;
  LayerKind kind = LayerKind::Lstm;
  std::vector<std::size_t> hidden{25, 25};
  InputMode mode = InputMode::Complex;
  double scale = 0.5;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_mse;
  double validation_mse = 0.0;
  double rho = 0.0;
  double magnitude_corr = 0.0;
};

/// Training samples are t = tau .. tau + train_len - 1 of `series`
/// (one series per input link), target h[t + horizon]. Needs
/// train_len <= length - horizon - tau.
PredictorModel train_predictor(std::span<const channel::GainSeries> series, const TrainConfig& cfg,
                               TrainReport* report = nullptr);

struct PredictionResult {
  /// predicted[k][t] is the forecast of h_k[t] made at t - horizon; zero for
  /// t < first_valid.
  std::vector<channel::GainSeries> predicted;
  std::size_t first_valid = 0;
  double rho = 0.0;
  double magnitude_corr = 0.0;
  double mse = 0.0;
};

/// Runs the model statefully over every link. Links are processed in groups
/// of model.links. Throws std::invalid_argument when a series is shorter than
/// tau + horizon + 1.
PredictionResult predict_series(PredictorModel& model, std::span<const channel::GainSeries> series);

/// |E[p conj(y)]| / sqrt(E|p|^2 E|y|^2) over [from, end).
double complex_correlation(std::span<const channel::GainSeries> pred,
                           std::span<const channel::GainSeries> truth, std::size_t from);
/// Pearson correlation of magnitudes over [from, end).
double magnitude_correlation(std::span<const channel::GainSeries> pred,
                             std::span<const channel::GainSeries> truth, std::size_t from);

}  // namespace prs::predictor
