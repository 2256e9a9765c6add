// SPDX-License-Identifier: Apache-2.0

#include "prs/predictor.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prs/rng.hpp"

namespace prs::predictor {

namespace {

using Matrix = Eigen::MatrixXd;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using VectorMap = Eigen::Map<Vector>;
using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

bool is_recurrent(LayerKind kind) { return kind != LayerKind::DenseTanh; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Parameter blocks of one layer inside the flat vector.
struct Blocks {
  std::size_t rows = 0;  // gate_multiplier * n
  std::size_t in = 0;
  std::size_t n = 0;
  std::size_t w = 0;  // offsets relative to the layer start
  std::size_t u = 0;
  std::size_t b = 0;
};

Blocks blocks_of(const LayerSpec& spec) {
  Blocks bl;
  bl.n = spec.output_dim;
  bl.in = spec.input_dim;
  bl.rows = gate_multiplier(spec.kind) * bl.n;
  bl.w = 0;
  bl.u = bl.rows * bl.in;
  bl.b = bl.u + (is_recurrent(spec.kind) ? bl.rows * bl.n : 0);
  return bl;
}

// Everything a step produces that the backward pass needs.
struct StepCache {
  Vector x;
  Vector s_prev;
  Vector c_prev;
  Vector gates;  // post-activation: dense output | rnn state | i,o,f,g | z,r,cand
  Vector rs;     // GRU: r * s_prev
  Vector c;
  Vector tc;  // tanh(c)
  Vector s;   // layer output
};

void step_layer(const LayerSpec& spec, const double* p, const Vector& x, const Vector& s_prev,
                const Vector& c_prev, StepCache& k) {
  const Blocks bl = blocks_of(spec);
  const Index n = idx(bl.n);
  ConstMatrixMap W(p + bl.w, idx(bl.rows), idx(bl.in));
  ConstVectorMap b(p + bl.b, idx(bl.rows));
  if (x.size() != idx(bl.in)) throw std::invalid_argument("layer input dimension mismatch");
  k.x = x;
  switch (spec.kind) {
    case LayerKind::DenseTanh: {
      k.gates.noalias() = W * x;
      k.gates += b;
      k.gates = k.gates.array().tanh();
      k.s = k.gates;
      break;
    }
    case LayerKind::Rnn: {
      ConstMatrixMap U(p + bl.u, idx(bl.rows), n);
      k.s_prev = s_prev;
      k.gates.noalias() = W * x;
      k.gates.noalias() += U * s_prev;
      k.gates += b;
      k.gates = k.gates.array().tanh();
      k.s = k.gates;
      break;
    }
    case LayerKind::Lstm: {
      ConstMatrixMap U(p + bl.u, idx(bl.rows), n);
      k.s_prev = s_prev;
      k.c_prev = c_prev;
      k.gates.noalias() = W * x;
      k.gates.noalias() += U * s_prev;
      k.gates += b;
      for (Index j = 0; j < 3 * n; ++j) k.gates[j] = sigmoid(k.gates[j]);
      for (Index j = 3 * n; j < 4 * n; ++j) k.gates[j] = std::tanh(k.gates[j]);
      const auto i = k.gates.segment(0, n).array();
      const auto o = k.gates.segment(n, n).array();
      const auto f = k.gates.segment(2 * n, n).array();
      const auto g = k.gates.segment(3 * n, n).array();
      k.c = f * c_prev.array() + i * g;
      k.tc = k.c.array().tanh();
      k.s = o * k.tc.array();
      break;
    }
    case LayerKind::Gru: {
      ConstMatrixMap U(p + bl.u, idx(bl.rows), n);
      k.s_prev = s_prev;
      k.gates.noalias() = W * x;
      k.gates += b;
      k.gates.head(2 * n).noalias() += U.topRows(2 * n) * s_prev;
      for (Index j = 0; j < 2 * n; ++j) k.gates[j] = sigmoid(k.gates[j]);
      k.rs = k.gates.segment(n, n).cwiseProduct(s_prev);
      k.gates.tail(n).noalias() += U.bottomRows(n) * k.rs;
      for (Index j = 2 * n; j < 3 * n; ++j) k.gates[j] = std::tanh(k.gates[j]);
      const auto z = k.gates.segment(0, n).array();
      const auto cand = k.gates.segment(2 * n, n).array();
      k.s = (1.0 - z) * s_prev.array() + z * cand;
      break;
    }
  }
}

// Backward through one layer step. `ds` is dL/d(output) including the
// recurrent carry; `dc` is the LSTM cell carry (in: from t+1, out: to t-1).
// On return `ds_prev` holds dL/d(s_prev) and `dx` holds dL/d(input).
void backward_layer(const LayerSpec& spec, const double* p, double* g, const StepCache& k,
                    const Vector& ds, Vector& dc, Vector& ds_prev, Vector& dx, Vector& da) {
  const Blocks bl = blocks_of(spec);
  const Index n = idx(bl.n);
  ConstMatrixMap W(p + bl.w, idx(bl.rows), idx(bl.in));
  MatrixMap gW(g + bl.w, idx(bl.rows), idx(bl.in));
  VectorMap gb(g + bl.b, idx(bl.rows));
  da.resize(idx(bl.rows));
  switch (spec.kind) {
    case LayerKind::DenseTanh:
    case LayerKind::Rnn: {
      da = ds.array() * (1.0 - k.gates.array().square());
      break;
    }
    case LayerKind::Lstm: {
      const auto i = k.gates.segment(0, n).array();
      const auto o = k.gates.segment(n, n).array();
      const auto f = k.gates.segment(2 * n, n).array();
      const auto gg = k.gates.segment(3 * n, n).array();
      const Vector dct = dc.array() + ds.array() * o * (1.0 - k.tc.array().square());
      da.segment(0, n) = (dct.array() * gg) * i * (1.0 - i);
      da.segment(n, n) = (ds.array() * k.tc.array()) * o * (1.0 - o);
      da.segment(2 * n, n) = (dct.array() * k.c_prev.array()) * f * (1.0 - f);
      da.segment(3 * n, n) = (dct.array() * i) * (1.0 - gg.square());
      dc = dct.array() * f;
      break;
    }
    case LayerKind::Gru: {
      ConstMatrixMap U(p + bl.u, idx(bl.rows), n);
      const auto z = k.gates.segment(0, n).array();
      const auto r = k.gates.segment(n, n).array();
      const auto cand = k.gates.segment(2 * n, n).array();
      da.segment(2 * n, n) = ds.array() * z * (1.0 - cand.square());
      const Vector drs = U.bottomRows(n).transpose() * da.segment(2 * n, n);
      da.segment(0, n) = ds.array() * (cand - k.s_prev.array()) * z * (1.0 - z);
      da.segment(n, n) = drs.array() * k.s_prev.array() * r * (1.0 - r);
      MatrixMap gU(g + bl.u, idx(bl.rows), n);
      gU.topRows(2 * n).noalias() += da.head(2 * n) * k.s_prev.transpose();
      gU.bottomRows(n).noalias() += da.tail(n) * k.rs.transpose();
      gW.noalias() += da * k.x.transpose();
      gb += da;
      dx.noalias() = W.transpose() * da;
      ds_prev = ds.array() * (1.0 - z) + drs.array() * r;
      ds_prev.noalias() += U.topRows(2 * n).transpose() * da.head(2 * n);
      return;
    }
  }
  gW.noalias() += da * k.x.transpose();
  gb += da;
  dx.noalias() = W.transpose() * da;
  if (is_recurrent(spec.kind)) {
    ConstMatrixMap U(p + bl.u, idx(bl.rows), n);
    MatrixMap gU(g + bl.u, idx(bl.rows), n);
    gU.noalias() += da * k.s_prev.transpose();
    ds_prev.noalias() = U.transpose() * da;
  }
}

void check_sequences(const RecurrentNet& net, std::span<const Vector> inputs,
                     std::span<const Vector> targets) {
  if (inputs.size() != targets.size()) throw std::invalid_argument("bptt: sequence lengths differ");
  if (inputs.empty()) throw std::invalid_argument("bptt: empty sequence");
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (inputs[t].size() != idx(net.input_dim()) || targets[t].size() != idx(net.output_dim())) {
      throw std::invalid_argument("bptt: dimension mismatch");
    }
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::DenseTanh: return "dense_tanh";
    case LayerKind::Rnn: return "rnn";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Gru: return "gru";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  if (name == "dense_tanh" || name == "dense") return LayerKind::DenseTanh;
  if (name == "rnn") return LayerKind::Rnn;
  if (name == "lstm") return LayerKind::Lstm;
  if (name == "gru") return LayerKind::Gru;
  throw std::invalid_argument(fmt::format("unknown layer kind '{}'", name));
}

std::size_t gate_multiplier(LayerKind kind) {
  switch (kind) {
    case LayerKind::DenseTanh: return 1;
    case LayerKind::Rnn: return 1;
    case LayerKind::Gru: return 3;
    case LayerKind::Lstm: return 4;
  }
  throw std::invalid_argument("unknown layer kind");
}

std::size_t parameter_count(const LayerSpec& spec) {
  const Blocks bl = blocks_of(spec);
  return bl.b + bl.rows;
}

std::vector<LayerSpec> make_stack(LayerKind recurrent, std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden, std::size_t output_dim) {
  if (hidden.empty()) throw std::invalid_argument("make_stack: need at least one hidden layer");
  if (!is_recurrent(recurrent)) throw std::invalid_argument("make_stack: hidden layers must be recurrent");
  std::vector<LayerSpec> layers;
  layers.push_back({LayerKind::DenseTanh, input_dim, hidden.front()});
  std::size_t prev = hidden.front();
  for (std::size_t h : hidden) {
    layers.push_back({recurrent, prev, h});
    prev = h;
  }
  layers.push_back({LayerKind::DenseTanh, prev, output_dim});
  return layers;
}

RecurrentNet::RecurrentNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& spec = layers_[l];
    if (spec.input_dim == 0 || spec.output_dim == 0) throw std::invalid_argument("layer dimensions must be positive");
    if (l > 0 && layers_[l - 1].output_dim != spec.input_dim) {
      throw std::invalid_argument(fmt::format("layer {} input does not match layer {} output", l, l - 1));
    }
    offsets_.push_back(total);
    total += parameter_count(spec);
  }
  params_ = Vector::Zero(idx(total));
  reset_state();
}

void RecurrentNet::initialize(std::uint64_t seed) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Stream rng(StreamKey{seed, 0x6e6574, l});
    const Blocks bl = blocks_of(layers_[l]);
    double* p = params_.data() + offsets_[l];
    const double lim_w = 1.0 / std::sqrt(static_cast<double>(bl.in));
    const double lim_u = 1.0 / std::sqrt(static_cast<double>(bl.n));
    for (std::size_t j = bl.w; j < bl.u; ++j) p[j] = rng.uniform(-lim_w, lim_w);
    for (std::size_t j = bl.u; j < bl.b; ++j) p[j] = rng.uniform(-lim_u, lim_u);
    for (std::size_t j = bl.b; j < bl.b + bl.rows; ++j) p[j] = rng.uniform(-lim_w, lim_w);
  }
}

void RecurrentNet::reset_state() {
  s_.assign(layers_.size(), Vector());
  c_.assign(layers_.size(), Vector());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    s_[l] = Vector::Zero(idx(layers_[l].output_dim));
    c_[l] = Vector::Zero(idx(layers_[l].output_dim));
  }
}

Vector RecurrentNet::forward(const Vector& input) {
  if (input.size() != idx(input_dim())) throw std::invalid_argument("forward: input dimension mismatch");
  thread_local StepCache cache;
  Vector x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    step_layer(layers_[l], params_.data() + offsets_[l], x, s_[l], c_[l], cache);
    if (is_recurrent(layers_[l].kind)) {
      s_[l] = cache.s;
      if (layers_[l].kind == LayerKind::Lstm) c_[l] = cache.c;
    }
    x = cache.s;
  }
  return x;
}

double sequence_loss(const RecurrentNet& net, std::span<const Vector> inputs,
                     std::span<const Vector> targets, double loss_scale) {
  check_sequences(net, inputs, targets);
  RecurrentNet copy = net;
  copy.reset_state();
  double loss = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) loss += (copy.forward(inputs[t]) - targets[t]).squaredNorm();
  return loss_scale * loss / static_cast<double>(inputs.size());
}

double backward_bptt(const RecurrentNet& net, std::span<const Vector> inputs,
                     std::span<const Vector> targets, Vector& grad, double loss_scale) {
  check_sequences(net, inputs, targets);
  const auto& layers = net.layers();
  const std::size_t L = layers.size();
  const std::size_t T = inputs.size();
  const double* p = net.params().data();

  std::vector<std::vector<StepCache>> caches(T, std::vector<StepCache>(L));
  std::vector<Vector> s(L), c(L);
  for (std::size_t l = 0; l < L; ++l) {
    s[l] = Vector::Zero(idx(layers[l].output_dim));
    c[l] = s[l];
  }
  double loss = 0.0;
  std::vector<Vector> dy(T);
  const double coeff = loss_scale / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const Vector* x = &inputs[t];
    for (std::size_t l = 0; l < L; ++l) {
      StepCache& k = caches[t][l];
      step_layer(layers[l], p + net.param_offset(l), *x, s[l], c[l], k);
      if (is_recurrent(layers[l].kind)) {
        s[l] = k.s;
        if (layers[l].kind == LayerKind::Lstm) c[l] = k.c;
      }
      x = &k.s;
    }
    const Vector err = *x - targets[t];
    loss += err.squaredNorm();
    dy[t] = 2.0 * coeff * err;
  }

  grad = Vector::Zero(net.params().size());
  std::vector<Vector> ds_carry(L), dc_carry(L);
  for (std::size_t l = 0; l < L; ++l) {
    ds_carry[l] = Vector::Zero(idx(layers[l].output_dim));
    dc_carry[l] = ds_carry[l];
  }
  Vector ds, ds_prev, dx, da;
  for (std::size_t t = T; t-- > 0;) {
    Vector upstream = dy[t];
    for (std::size_t l = L; l-- > 0;) {
      ds = upstream;
      if (is_recurrent(layers[l].kind)) ds += ds_carry[l];
      backward_layer(layers[l], p + net.param_offset(l), grad.data() + net.param_offset(l), caches[t][l],
                     ds, dc_carry[l], ds_prev, dx, da);
      if (is_recurrent(layers[l].kind)) ds_carry[l] = ds_prev;
      upstream = dx;
    }
  }
  return coeff * loss;
}

void adam_step(AdamState& state, const AdamConfig& cfg, const Vector& grad, Vector& params) {
  if (state.m.size() != params.size() || grad.size() != params.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

std::string_view to_string(InputMode mode) { return mode == InputMode::Complex ? "complex" : "magnitude"; }

InputMode parse_input_mode(std::string_view name) {
  if (name == "complex") return InputMode::Complex;
  if (name == "magnitude") return InputMode::Magnitude;
  throw std::invalid_argument(fmt::format("unknown input mode '{}'", name));
}

TappedDelayLine::TappedDelayLine(std::size_t links, std::size_t depth, InputMode mode)
    : links_(links), depth_(depth), mode_(mode) {
  if (links == 0) throw std::invalid_argument("tapped delay line needs at least one link");
}

void TappedDelayLine::push(std::span<const channel::ComplexGain> snapshot) {
  if (snapshot.size() != links_) throw std::invalid_argument("tapped delay line: snapshot size mismatch");
  if (history_.size() == depth_ + 1) history_.pop_front();
  history_.emplace_back(snapshot.begin(), snapshot.end());
}

std::size_t TappedDelayLine::dim() const {
  return (mode_ == InputMode::Complex ? 2 : 1) * links_ * (depth_ + 1);
}

Vector TappedDelayLine::build_input_vector(double scale) const {
  if (!filled()) throw std::logic_error("tapped delay line is not filled yet");
  Vector v(idx(dim()));
  Index pos = 0;
  for (const auto& slot : history_) {
    if (mode_ == InputMode::Magnitude) {
      for (const auto& h : slot) v[pos++] = scale * std::abs(h);
    } else {
      for (const auto& h : slot) v[pos++] = scale * h.real();
      for (const auto& h : slot) v[pos++] = scale * h.imag();
    }
  }
  return v;
}

std::uint64_t flops_per_step(std::span<const LayerSpec> layers) {
  if (layers.size() < 3 || layers.front().kind != LayerKind::DenseTanh ||
      layers.back().kind != LayerKind::DenseTanh) {
    throw std::invalid_argument("flops: expected dense input, recurrent hidden layers, dense output");
  }
  const std::uint64_t n_in = layers.front().input_dim;
  std::uint64_t sum = n_in * layers.front().output_dim;
  sum += static_cast<std::uint64_t>(layers.back().input_dim) * layers.back().output_dim;
  std::uint64_t prev = n_in;
  for (std::size_t l = 1; l + 1 < layers.size(); ++l) {
    if (!is_recurrent(layers[l].kind)) throw std::invalid_argument("flops: hidden layers must be recurrent");
    const std::uint64_t n = layers[l].output_dim;
    sum += gate_multiplier(layers[l].kind) * (prev * n + n * n);
    prev = n;
  }
  return 2 * sum;
}

std::uint64_t flops_simplified(LayerKind kind, std::size_t L, std::size_t n) {
  if (!is_recurrent(kind)) throw std::invalid_argument("flops: layer kind must be recurrent");
  return 4 * (1 + gate_multiplier(kind) * L) * static_cast<std::uint64_t>(n) * n;
}

void save_model(std::ostream& out, const PredictorModel& model) {
  fmt::print(out, "prs-model 1\n");
  fmt::print(out, "links {}\ntau {}\nhorizon {}\nmode {}\nscale {:.17g}\n", model.links, model.tau,
             model.horizon, to_string(model.mode), model.scale);
  const auto& layers = model.net.layers();
  fmt::print(out, "layers {}\n", layers.size());
  for (const auto& l : layers) fmt::print(out, "{} {} {}\n", to_string(l.kind), l.input_dim, l.output_dim);
  const auto& p = model.net.params();
  fmt::print(out, "params {}\n", p.size());
  for (Index i = 0; i < p.size(); ++i) fmt::print(out, "{:.17g}\n", p[i]);
}

PredictorModel load_model(std::istream& in) {
  auto expect = [&](const char* key) {
    std::string word;
    if (!(in >> word) || word != key) throw std::runtime_error(fmt::format("model file: expected '{}'", key));
  };
  expect("prs-model");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error(fmt::format("model file: unsupported version {}", version));
  std::size_t links = 0, tau = 0, horizon = 0, n_layers = 0, n_params = 0;
  std::string mode;
  double scale = 0.0;
  expect("links");
  in >> links;
  expect("tau");
  in >> tau;
  expect("horizon");
  in >> horizon;
  expect("mode");
  in >> mode;
  expect("scale");
  in >> scale;
  expect("layers");
  in >> n_layers;
  if (!in) throw std::runtime_error("model file: malformed header");
  std::vector<LayerSpec> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::string kind;
    LayerSpec spec;
    in >> kind >> spec.input_dim >> spec.output_dim;
    if (!in) throw std::runtime_error("model file: malformed layer line");
    spec.kind = parse_layer_kind(kind);
    layers.push_back(spec);
  }
  PredictorModel model{RecurrentNet(layers), links, tau, horizon, parse_input_mode(mode), scale};
  expect("params");
  in >> n_params;
  if (!in || n_params != static_cast<std::size_t>(model.net.params().size())) {
    throw std::runtime_error("model file: parameter count does not match layers");
  }
  for (std::size_t i = 0; i < n_params; ++i) {
    if (!(in >> model.net.params()[idx(i)])) throw std::runtime_error("model file: truncated parameters");
  }
  return model;
}

void save_model_file(const std::string& path, const PredictorModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(out, model);
  if (!out) throw std::runtime_error("write failed: " + path);
}

PredictorModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_model(in);
}

namespace {

Vector encode_target(std::span<const channel::ComplexGain> snapshot, InputMode mode, double scale) {
  const std::size_t K = snapshot.size();
  Vector y(idx(mode == InputMode::Complex ? 2 * K : K));
  for (std::size_t k = 0; k < K; ++k) {
    if (mode == InputMode::Complex) {
      y[idx(k)] = scale * snapshot[k].real();
      y[idx(K + k)] = scale * snapshot[k].imag();
    } else {
      y[idx(k)] = scale * std::abs(snapshot[k]);
    }
  }
  return y;
}

channel::ComplexGain decode_output(const Vector& y, std::size_t k, std::size_t K, InputMode mode, double scale) {
  if (mode == InputMode::Complex) return {y[idx(k)] / scale, y[idx(K + k)] / scale};
  return {y[idx(k)] / scale, 0.0};
}

std::vector<channel::ComplexGain> snapshot_at(std::span<const channel::GainSeries> series, std::size_t first,
                                              std::size_t count, std::size_t t) {
  std::vector<channel::ComplexGain> snap(count);
  for (std::size_t k = 0; k < count; ++k) snap[k] = series[first + k][t];
  return snap;
}

}  // namespace

PredictorModel train_predictor(std::span<const channel::GainSeries> series, const TrainConfig& cfg,
                               TrainReport* report) {
  if (series.empty()) throw std::invalid_argument("train: no series");
  const std::size_t K = series.size();
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw std::invalid_argument("train: series lengths differ");
  }
  if (cfg.batch_size == 0 || cfg.epochs == 0 || cfg.train_len == 0 || cfg.horizon == 0) {
    throw std::invalid_argument("train: batch size, epochs, train_len and horizon must be positive");
  }
  if (len < cfg.tau + cfg.horizon || cfg.train_len > len - cfg.horizon - cfg.tau) {
    throw std::invalid_argument(fmt::format("train: train_len {} exceeds dataset length {} - horizon - tau",
                                            cfg.train_len, len));
  }
  const std::size_t width = cfg.mode == InputMode::Complex ? 2 * K : K;
  PredictorModel model{RecurrentNet(make_stack(cfg.kind, width * (cfg.tau + 1), cfg.hidden, width)), K, cfg.tau,
                       cfg.horizon, cfg.mode, cfg.scale};
  model.net.initialize(cfg.seed);

  // Samples t = tau .. tau + train_len - 1.
  std::vector<Vector> inputs, targets;
  inputs.reserve(cfg.train_len);
  targets.reserve(cfg.train_len);
  TappedDelayLine tdl(K, cfg.tau, cfg.mode);
  for (std::size_t t = 0; t < cfg.tau + cfg.train_len; ++t) {
    tdl.push(snapshot_at(series, 0, K, t));
    if (!tdl.filled()) continue;
    inputs.push_back(tdl.build_input_vector(cfg.scale));
    targets.push_back(encode_target(snapshot_at(series, 0, K, t + cfg.horizon), cfg.mode, cfg.scale));
  }

  AdamState adam(static_cast<std::size_t>(model.net.params().size()));
  Vector grad;
  const double unscale = 1.0 / (cfg.scale * cfg.scale);
  std::vector<double> epoch_mse;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double weighted = 0.0;
    for (std::size_t start = 0; start < inputs.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, inputs.size() - start);
      const std::span<const Vector> xb(inputs.data() + start, n);
      const std::span<const Vector> yb(targets.data() + start, n);
      const double loss = backward_bptt(model.net, xb, yb, grad);
      adam_step(adam, cfg.adam, grad, model.net.params());
      weighted += loss * static_cast<double>(n);
    }
    epoch_mse.push_back(weighted / static_cast<double>(inputs.size()) * unscale);
  }

  if (report) {
    report->epoch_mse = epoch_mse;
    PredictionResult pred = predict_series(model, series);
    // Out-of-sample targets when the series extends past the training window.
    std::size_t from = cfg.tau + cfg.train_len + cfg.horizon;
    if (from + 100 > len) from = pred.first_valid;
    report->rho = complex_correlation(pred.predicted, series, from);
    report->magnitude_corr = magnitude_correlation(pred.predicted, series, from);
    double se = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = from; t < len; ++t) {
        const auto truth = cfg.mode == InputMode::Complex ? series[k][t]
                                                          : channel::ComplexGain(std::abs(series[k][t]), 0.0);
        se += std::norm(pred.predicted[k][t] - truth);
        ++count;
      }
    }
    report->validation_mse = se / static_cast<double>(count) * static_cast<double>(K);
  }
  model.net.reset_state();
  return model;
}

PredictionResult predict_series(PredictorModel& model, std::span<const channel::GainSeries> series) {
  if (series.empty()) throw std::invalid_argument("predict: no series");
  const std::size_t K = model.links;
  if (series.size() % K != 0) throw std::invalid_argument("predict: link count is not a multiple of the model width");
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw std::invalid_argument("predict: series lengths differ");
  }
  if (len < model.tau + model.horizon + 1) throw std::invalid_argument("predict: series too short");

  PredictionResult result;
  result.first_valid = model.tau + model.horizon;
  result.predicted.assign(series.size(), channel::GainSeries(len, channel::ComplexGain(0.0, 0.0)));
  TappedDelayLine tdl(K, model.tau, model.mode);
  std::vector<channel::ComplexGain> snap(K);
  for (std::size_t group = 0; group < series.size(); group += K) {
    model.net.reset_state();
    tdl.clear();
    for (std::size_t t = 0; t + model.horizon < len; ++t) {
      for (std::size_t k = 0; k < K; ++k) snap[k] = series[group + k][t];
      tdl.push(snap);
      if (!tdl.filled()) continue;
      const Vector y = model.net.forward(tdl.build_input_vector(model.scale));
      for (std::size_t k = 0; k < K; ++k) {
        result.predicted[group + k][t + model.horizon] = decode_output(y, k, K, model.mode, model.scale);
      }
    }
  }
  model.net.reset_state();
  result.rho = complex_correlation(result.predicted, series, result.first_valid);
  result.magnitude_corr = magnitude_correlation(result.predicted, series, result.first_valid);
  double se = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (std::size_t t = result.first_valid; t < len; ++t) se += std::norm(result.predicted[k][t] - series[k][t]);
  }
  result.mse = se / static_cast<double>((len - result.first_valid) * series.size());
  return result;
}

double complex_correlation(std::span<const channel::GainSeries> pred, std::span<const channel::GainSeries> truth,
                           std::size_t from) {
  if (pred.size() != truth.size()) throw std::invalid_argument("correlation: link counts differ");
  std::complex<double> cross = 0.0;
  double pp = 0.0;
  double yy = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    for (std::size_t t = from; t < truth[k].size(); ++t) {
      cross += pred[k][t] * std::conj(truth[k][t]);
      pp += std::norm(pred[k][t]);
      yy += std::norm(truth[k][t]);
    }
  }
  if (pp == 0.0 || yy == 0.0) return 0.0;
  return std::abs(cross) / std::sqrt(pp * yy);
}

double magnitude_correlation(std::span<const channel::GainSeries> pred, std::span<const channel::GainSeries> truth,
                             std::size_t from) {
  if (pred.size() != truth.size()) throw std::invalid_argument("correlation: link counts differ");
  double n = 0.0, sp = 0.0, sy = 0.0, spp = 0.0, syy = 0.0, spy = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    for (std::size_t t = from; t < truth[k].size(); ++t) {
      const double a = std::abs(pred[k][t]);
      const double b = std::abs(truth[k][t]);
      n += 1.0;
      sp += a;
      sy += b;
      spp += a * a;
      syy += b * b;
      spy += a * b;
    }
  }
  const double cov = spy / n - (sp / n) * (sy / n);
  const double vp = spp / n - (sp / n) * (sp / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  if (vp <= 0.0 || vy <= 0.0) return 0.0;
  return cov / std::sqrt(vp * vy);
}

}  // namespace prs::predictor
