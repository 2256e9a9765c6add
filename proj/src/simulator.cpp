// SPDX-License-Identifier: Apache-2.0

#include "prs/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "prs/numerics.hpp"

namespace prs::sim {

using selection::RateConfig;

double TimerModel::duration(double magnitude) const {
  if (!(magnitude > 0.0)) return max_duration;
  return std::min(c / magnitude, max_duration);
}

void TimerModel::validate() const {
  if (!(c > 0.0) || !(max_duration > 0.0) || !(uncertainty >= 0.0)) {
    throw std::invalid_argument("timer: need c > 0, T_m > 0 and uncertainty >= 0");
  }
}

void NetworkConfig::validate() const {
  if (relays == 0) throw std::invalid_argument("network: need at least one relay");
  if (!(target_rate > 0.0)) throw std::invalid_argument("network: target rate must be positive");
  if (!(source_power_fraction > 0.0) || !(relay_power_fraction > 0.0) ||
      source_power_fraction + relay_power_fraction > 1.0 + 1e-12) {
    throw std::invalid_argument("network: power fractions must be positive and sum to at most 1");
  }
  if (!(noise_var > 0.0)) throw std::invalid_argument("network: noise variance must be positive");
  timer.validate();
}

LinkBudget link_budget(const NetworkConfig& net, double snr_db) {
  const double total = net.noise_var * std::pow(10.0, snr_db / 10.0);
  return {net.source_power_fraction * total, net.relay_power_fraction * total, total, net.noise_var};
}

namespace {

double snr(ComplexGain h, double power, double noise) { return channel::snr_from_gain(h, power, noise); }

// The buffer written at t - 1, or the current CSI on the very first frame.
const FrameCsi& fetch_metric(FrameState& state, const FrameCsi& actual) {
  if (state.buffer.written_at < 0) {
    state.bootstrap = true;
    return actual;
  }
  if (state.buffer.written_at != state.t - 1) {
    throw std::logic_error(fmt::format("buffer written at frame {} read at frame {}", state.buffer.written_at,
                                       state.t));
  }
  state.bootstrap = false;
  return state.buffer.csi;
}

void begin_frame(FrameState& state, const FrameCsi& actual, std::size_t relays) {
  if (actual.relays.size() != relays) throw std::invalid_argument("frame CSI does not match relay count");
  ++state.t;
  state.actual = actual;
  state.collision = false;
  state.decoding_set.clear();
  state.outcome = SelectionOutcome{};
}

void end_frame(FrameState& state, const FrameCsi& next_forecast) {
  state.buffer.csi = next_forecast;
  state.buffer.written_at = state.t;
}

void set_relayed(SelectionOutcome& out, std::vector<RelayId> chosen, double e2e, const RateConfig& rate) {
  out.chosen = std::move(chosen);
  out.end_to_end_snr_actual = e2e;
  out.realized_rate = selection::half_duplex_rate(e2e);
  out.outage = selection::half_duplex_outage(e2e, rate);
}

void set_failed(SelectionOutcome& out) {
  out.chosen.clear();
  out.end_to_end_snr_actual = 0.0;
  out.realized_rate = 0.0;
  out.outage = true;
}

// Timer race among `candidates` with amplitude-like metrics. Returns the
// winner and flags a collision when the two earliest timers are closer than
// the uncertainty window.
std::optional<RelayId> timer_race(const std::vector<RelayId>& candidates, const std::vector<double>& amplitude,
                                  const TimerModel& timer, bool& collision) {
  collision = false;
  std::optional<RelayId> best;
  double t1 = std::numeric_limits<double>::infinity();
  double t2 = std::numeric_limits<double>::infinity();
  for (RelayId id : candidates) {
    const double t = timer.duration(amplitude[static_cast<std::size_t>(id - 1)]);
    if (t < t1) {
      t2 = t1;
      t1 = t;
      best = id;
    } else if (t < t2) {
      t2 = t;
    }
  }
  if (best && std::isfinite(t2) && t2 - t1 < timer.uncertainty) collision = true;
  return best;
}

std::vector<double> decode_snrs(const FrameCsi& actual, const LinkBudget& b) {
  std::vector<double> g(actual.relays.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = snr(actual.relays[k].sr, b.source_power, b.noise_var);
  return g;
}

std::vector<RelayId> all_relays(std::size_t K) {
  std::vector<RelayId> ids(K);
  for (std::size_t k = 0; k < K; ++k) ids[k] = static_cast<RelayId>(k + 1);
  return ids;
}

double af_metric(const LinkCsi& m, const LinkBudget& b) {
  return std::min(snr(m.sr, b.source_power, b.noise_var), snr(m.rd, b.relay_power, b.noise_var));
}

double af_actual(const LinkCsi& a, const NetworkConfig& net, const LinkBudget& b) {
  return selection::af_effective_snr(snr(a.sr, b.source_power, b.noise_var), snr(a.rd, b.relay_power, b.noise_var),
                                     net.af_snr == AfSnrModel::Bound);
}

}  // namespace

FrameState run_distributed_df_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget) {
  begin_frame(state, actual, net.relays);
  const RateConfig rate(net.target_rate);
  const FrameCsi& metric = fetch_metric(state, actual);
  const auto sr = decode_snrs(actual, budget);
  state.decoding_set = selection::decoding_subset(sr, rate);
  std::vector<double> amplitude(net.relays);
  for (std::size_t k = 0; k < net.relays; ++k) amplitude[k] = std::abs(metric.relays[k].rd);
  bool collision = false;
  const auto winner = timer_race(state.decoding_set, amplitude, net.timer, collision);
  state.collision = collision;
  if (!winner || collision) {
    set_failed(state.outcome);
  } else {
    const double g = snr(actual.relays[static_cast<std::size_t>(*winner - 1)].rd, budget.relay_power,
                         budget.noise_var);
    set_relayed(state.outcome, {*winner}, g, rate);
  }
  end_frame(state, next_forecast);
  return state;
}

FrameState run_distributed_af_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget) {
  begin_frame(state, actual, net.relays);
  const RateConfig rate(net.target_rate);
  const FrameCsi& metric = fetch_metric(state, actual);
  // Timers run on sqrt of the min-hop metric SNR, which orders relays like
  // the min of the hop magnitudes.
  std::vector<double> amplitude(net.relays);
  for (std::size_t k = 0; k < net.relays; ++k) amplitude[k] = std::sqrt(af_metric(metric.relays[k], budget));
  bool collision = false;
  const auto winner = timer_race(all_relays(net.relays), amplitude, net.timer, collision);
  state.collision = collision;
  if (!winner || collision) {
    set_failed(state.outcome);
  } else {
    set_relayed(state.outcome, {*winner}, af_actual(actual.relays[static_cast<std::size_t>(*winner - 1)], net, budget),
                rate);
  }
  end_frame(state, next_forecast);
  return state;
}

FrameState run_centralized_df_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget) {
  begin_frame(state, actual, net.relays);
  const RateConfig rate(net.target_rate);
  const FrameCsi& metric = fetch_metric(state, actual);
  const auto sr = decode_snrs(actual, budget);
  state.decoding_set = selection::decoding_subset(sr, rate);
  std::vector<double> m(net.relays);
  for (std::size_t k = 0; k < net.relays; ++k) m[k] = std::abs(metric.relays[k].rd);
  // The destination ranks every relay; it learns about decoding failures
  // only after picking one.
  const auto everyone = all_relays(net.relays);
  std::optional<RelayId> chosen = selection::select_best_df(everyone, m);
  const bool decoded =
      chosen && std::binary_search(state.decoding_set.begin(), state.decoding_set.end(), *chosen);
  if (!decoded) {
    chosen = net.reselect == ReselectPolicy::Reselect ? selection::select_best_df(state.decoding_set, m)
                                                      : std::nullopt;
  }
  if (!chosen) {
    set_failed(state.outcome);
  } else {
    const double g = snr(actual.relays[static_cast<std::size_t>(*chosen - 1)].rd, budget.relay_power,
                         budget.noise_var);
    set_relayed(state.outcome, {*chosen}, g, rate);
  }
  end_frame(state, next_forecast);
  return state;
}

FrameState run_ostc_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                          const NetworkConfig& net, const LinkBudget& budget) {
  begin_frame(state, actual, net.relays);
  const RateConfig rate(net.target_rate);
  const FrameCsi& metric = fetch_metric(state, actual);
  std::vector<double> m(net.relays);
  std::vector<RelayId> candidates;
  auto actual_snr = [&](RelayId id) {
    const auto& link = actual.relays[static_cast<std::size_t>(id - 1)];
    // Each branch SNR is at full relay power; the pair splits it evenly.
    return net.relaying == Relaying::Df ? snr(link.rd, budget.relay_power, budget.noise_var)
                                        : af_actual(link, net, budget);
  };
  if (net.relaying == Relaying::Df) {
    state.decoding_set = selection::decoding_subset(decode_snrs(actual, budget), rate);
    candidates = state.decoding_set;
    for (std::size_t k = 0; k < net.relays; ++k) m[k] = std::abs(metric.relays[k].rd);
  } else {
    candidates = all_relays(net.relays);
    for (std::size_t k = 0; k < net.relays; ++k) m[k] = af_metric(metric.relays[k], budget);
  }
  const auto pair = selection::select_ostc_pair(candidates, m);
  if (!pair.first) {
    set_failed(state.outcome);
  } else if (!pair.second) {
    set_relayed(state.outcome, {*pair.first}, actual_snr(*pair.first), rate);
  } else {
    const double g = selection::ostc_effective_snr(actual_snr(*pair.first), actual_snr(*pair.second));
    set_relayed(state.outcome, {*pair.first, *pair.second}, g, rate);
  }
  end_frame(state, next_forecast);
  return state;
}

FrameState run_direct_frame(FrameState state, const FrameCsi& actual, const NetworkConfig& net,
                            const LinkBudget& budget) {
  begin_frame(state, actual, net.relays);
  const RateConfig rate(net.target_rate);
  const double g = snr(actual.sd, budget.direct_power, budget.noise_var);
  state.outcome.end_to_end_snr_actual = g;
  state.outcome.realized_rate = std::log2(1.0 + g);
  state.outcome.outage = selection::direct_transmission_outcome(g, rate);
  return state;
}

FrameCsi apply_impairments(FrameCsi csi, const ImpairmentConfig& cfg, Stream& rng, CsiRole role,
                           double mean_power) {
  if (role == CsiRole::Estimate) {
    if (!cfg.pilot_snr_db) return csi;
    const double var = mean_power * std::pow(10.0, -*cfg.pilot_snr_db / 10.0);
    for (auto& link : csi.relays) {
      link.sr += rng.complex_normal(var);
      link.rd += rng.complex_normal(var);
    }
    csi.sd += rng.complex_normal(var);
    return csi;
  }
  if (!cfg.max_phase_error_deg) return csi;
  const double theta = *cfg.max_phase_error_deg * numerics::kPi / 180.0;
  auto factor = [&]() { return std::cos(rng.uniform(-theta, theta)); };
  for (auto& link : csi.relays) {
    link.sr *= factor();
    link.rd *= factor();
  }
  csi.sd *= factor();
  return csi;
}

SyntheticCsiSource::SyntheticCsiSource(const SyntheticCsiConfig& cfg, const StreamKey& key) : cfg_(cfg), rng_(key) {
  if (cfg.relays == 0) throw std::invalid_argument("synthetic source: need at least one relay");
  for (double rho : {cfg.rho_outdated, cfg.rho_predicted}) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("synthetic source: rho must lie in [0, 1]");
  }
  if (!(cfg.sr_weight > 0.0) || !(cfg.rd_weight > 0.0)) {
    throw std::invalid_argument("synthetic source: hop weights must be positive");
  }
}

FrameCsi SyntheticCsiSource::draw_frame() {
  FrameCsi f;
  f.relays.resize(cfg_.relays);
  for (auto& link : f.relays) {
    link.sr = rng_.complex_normal();
    link.rd = rng_.complex_normal();
  }
  f.sd = rng_.complex_normal();
  return f;
}

void SyntheticCsiSource::draw_forecast(FrameCsi& out, double rho) {
  const channel::OutdatedCsiModel model{rho, 1.0, 1.0};
  out.relays.resize(cfg_.relays);
  out.sd = next_.sd;
  const bool end_to_end = cfg_.relaying == Relaying::Af && cfg_.af_correlation == AfCorrelation::EndToEnd;
  const double total = cfg_.sr_weight + cfg_.rd_weight;
  for (std::size_t k = 0; k < cfg_.relays; ++k) {
    const LinkCsi& a = next_.relays[k];
    LinkCsi& f = out.relays[k];
    if (cfg_.relaying == Relaying::Df) {
      f.sr = a.sr;
      f.rd = channel::degrade_csi(a.rd, model, rng_);
    } else if (!end_to_end) {
      f.sr = channel::degrade_csi(a.sr, model, rng_);
      f.rd = channel::degrade_csi(a.rd, model, rng_);
    } else {
      // Effective gain g with |g|^2 = min-bound SNR / gamma_e and a random
      // phase; its forecast is spread so that both hops give min = gamma_e |g_check|^2.
      const double ge = cfg_.sr_weight * cfg_.rd_weight / total;
      const double m = std::min(cfg_.sr_weight * std::norm(a.sr), cfg_.rd_weight * std::norm(a.rd));
      const ComplexGain g = std::polar(std::sqrt(m / ge), rng_.uniform(-numerics::kPi, numerics::kPi));
      const ComplexGain gc = channel::degrade_csi(g, model, rng_);
      f.sr = gc * std::sqrt(cfg_.rd_weight / total);
      f.rd = gc * std::sqrt(cfg_.sr_weight / total);
    }
  }
}

const FrameCsi& SyntheticCsiSource::advance() {
  if (!started_) {
    current_ = draw_frame();
    started_ = true;
  } else {
    std::swap(current_, next_);
  }
  next_ = draw_frame();
  if (cfg_.need_outdated) draw_forecast(outdated_, cfg_.rho_outdated);
  if (cfg_.need_predicted) draw_forecast(predicted_, cfg_.rho_predicted);
  return current_;
}

const FrameCsi& SyntheticCsiSource::forecast(CsiQuality quality) {
  if (!started_) throw std::logic_error("synthetic source: forecast before advance");
  switch (quality) {
    case CsiQuality::Perfect: return next_;
    case CsiQuality::Outdated:
      if (!cfg_.need_outdated) throw std::logic_error("synthetic source: outdated CSI not enabled");
      return outdated_;
    case CsiQuality::Predicted:
      if (!cfg_.need_predicted) throw std::logic_error("synthetic source: predicted CSI not enabled");
      return predicted_;
  }
  throw std::logic_error("unknown CSI quality");
}

std::size_t TimeSeriesData::frames_available() const {
  const std::size_t len = sd.size();
  if (len < first_sample + spacing + 1) return 0;
  return (len - 1 - first_sample) / spacing;
}

std::shared_ptr<const TimeSeriesData> build_time_series(const TimeSeriesBuild& build,
                                                        predictor::PredictorModel& model) {
  if (build.relays == 0 || build.frames == 0) throw std::invalid_argument("time series: need relays and frames");
  auto data = std::make_shared<TimeSeriesData>();
  data->spacing = model.horizon;
  data->first_sample = model.tau + model.horizon;
  const std::size_t len = data->first_sample + (build.frames + 1) * data->spacing + 1;
  const std::size_t K = build.relays;
  for (std::size_t k = 0; k < K; ++k) {
    data->sr.push_back(channel::generate_series(build.fading, len, k));
    data->rd.push_back(channel::generate_series(build.fading, len, 1000 + k));
  }
  data->sd = channel::generate_series(build.fading, len, 2000);

  data->noisy = build.impairments.pilot_snr_db.has_value();
  if (data->noisy) {
    data->sr_observed = data->sr;
    data->rd_observed = data->rd;
    const double var = build.fading.mean_power * std::pow(10.0, -*build.impairments.pilot_snr_db / 10.0);
    Stream rng(StreamKey{build.fading.seed, 0x6e6f697365, 0});
    for (auto* group : {&data->sr_observed, &data->rd_observed}) {
      for (auto& s : *group) {
        for (auto& h : s) h += rng.complex_normal(var);
      }
    }
  }
  const auto& sr_obs = data->noisy ? data->sr_observed : data->sr;
  const auto& rd_obs = data->noisy ? data->rd_observed : data->rd;
  // The predictor was trained on unit-power series; rescale around it.
  const double amp = std::sqrt(build.fading.mean_power);
  auto run = [&](const std::vector<channel::GainSeries>& observed) {
    std::vector<channel::GainSeries> unit = observed;
    for (auto& s : unit) {
      for (auto& h : s) h /= amp;
    }
    auto pred = predictor::predict_series(model, unit);
    for (auto& s : pred.predicted) {
      for (auto& h : s) h *= amp;
    }
    return pred.predicted;
  };
  data->rd_predicted = run(rd_obs);
  if (build.predict_source_hop) data->sr_predicted = run(sr_obs);
  data->rho_predicted = predictor::complex_correlation(data->rd_predicted, data->rd, data->first_sample);
  return data;
}

TimeSeriesCsiSource::TimeSeriesCsiSource(std::shared_ptr<const TimeSeriesData> data, std::size_t first_frame)
    : data_(std::move(data)), frame_(first_frame) {
  if (!data_) throw std::invalid_argument("time series source: no data");
}

void TimeSeriesCsiSource::fill(FrameCsi& out, std::size_t sample, int which) {
  const auto& d = *data_;
  if (sample >= d.sd.size()) throw std::out_of_range("time series source: ran past the generated series");
  const std::size_t K = d.rd.size();
  out.relays.resize(K);
  const auto& sr_obs = d.noisy ? d.sr_observed : d.sr;
  const auto& rd_obs = d.noisy ? d.rd_observed : d.rd;
  const auto& sr_pred = d.sr_predicted.empty() ? sr_obs : d.sr_predicted;
  for (std::size_t k = 0; k < K; ++k) {
    switch (which) {
      case 0: out.relays[k] = {d.sr[k][sample], d.rd[k][sample]}; break;
      case 1: out.relays[k] = {sr_obs[k][sample], rd_obs[k][sample]}; break;
      default: out.relays[k] = {sr_pred[k][sample], d.rd_predicted[k][sample]}; break;
    }
  }
  out.sd = d.sd[sample];
}

const FrameCsi& TimeSeriesCsiSource::advance() {
  if (started_) ++frame_;
  started_ = true;
  fill(current_, data_->first_sample + frame_ * data_->spacing, 0);
  return current_;
}

const FrameCsi& TimeSeriesCsiSource::forecast(CsiQuality quality) {
  if (!started_) throw std::logic_error("time series source: forecast before advance");
  const std::size_t now = data_->first_sample + frame_ * data_->spacing;
  switch (quality) {
    case CsiQuality::Perfect: fill(scratch_, now + data_->spacing, 0); break;
    case CsiQuality::Outdated: fill(scratch_, now, 1); break;
    case CsiQuality::Predicted: fill(scratch_, now + data_->spacing, 2); break;
  }
  return scratch_;
}

SchemeSpec scheme_from_label(const std::string& label) {
  if (label == "ORS") return {Scheme::Ors, CsiQuality::Outdated, label};
  if (label == "ORS-perfect") return {Scheme::Ors, CsiQuality::Perfect, label};
  if (label == "PRS") return {Scheme::Prs, CsiQuality::Predicted, label};
  if (label == "OSTC") return {Scheme::Ostc, CsiQuality::Outdated, label};
  if (label == "DT") return {Scheme::Direct, CsiQuality::Perfect, label};
  throw std::invalid_argument(fmt::format("unknown scheme '{}'", label));
}

FrameState run_frame(const SchemeSpec& spec, FrameState state, const FrameCsi& actual,
                     const FrameCsi& next_forecast, const NetworkConfig& net, const LinkBudget& budget) {
  FrameState out;
  switch (spec.scheme) {
    case Scheme::Direct: out = run_direct_frame(std::move(state), actual, net, budget); break;
    case Scheme::Ostc: out = run_ostc_frame(std::move(state), actual, next_forecast, net, budget); break;
    case Scheme::Ors:
    case Scheme::Prs:
      if (net.relaying == Relaying::Af) {
        out = run_distributed_af_frame(std::move(state), actual, next_forecast, net, budget);
      } else if (net.selection == SelectionMode::Centralized) {
        out = run_centralized_df_frame(std::move(state), actual, next_forecast, net, budget);
      } else {
        out = run_distributed_df_frame(std::move(state), actual, next_forecast, net, budget);
      }
      break;
  }
  out.outcome.scheme = spec.scheme;
  return out;
}

double binomial_std_error(double p, std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("std error: need at least one trial");
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

SourceFactory synthetic_factory(const SyntheticCsiConfig& cfg, std::uint64_t seed) {
  return [cfg, seed](std::size_t grid, std::size_t chunk, std::size_t) -> std::unique_ptr<CsiSource> {
    return std::make_unique<SyntheticCsiSource>(cfg, StreamKey{seed, grid, chunk});
  };
}

SourceFactory time_series_factory(std::shared_ptr<const TimeSeriesData> data) {
  return [data](std::size_t, std::size_t, std::size_t first_frame) -> std::unique_ptr<CsiSource> {
    return std::make_unique<TimeSeriesCsiSource>(data, first_frame);
  };
}

std::size_t frames_required(std::int64_t trials, std::size_t chunk_frames) {
  const auto n = static_cast<std::size_t>(trials);
  const std::size_t chunks = (n + chunk_frames - 1) / chunk_frames;
  return n + chunks;
}

namespace {

struct Tally {
  std::int64_t frames = 0;
  std::int64_t outages = 0;
  std::int64_t collisions = 0;
  double rate_sum = 0.0;
  double rate_sq = 0.0;
};

}  // namespace

std::vector<std::vector<McEstimate>> estimate(const EstimateRequest& request, const SourceFactory& factory) {
  request.network.validate();
  if (request.schemes.empty()) throw std::invalid_argument("estimate: no schemes");
  if (request.snr_db.empty()) throw std::invalid_argument("estimate: empty SNR grid");
  if (request.trials < 1) throw std::invalid_argument("estimate: need at least one trial");
  if (request.chunk_frames == 0) throw std::invalid_argument("estimate: chunk size must be positive");

  const std::size_t S = request.schemes.size();
  const std::size_t G = request.snr_db.size();
  const auto trials = static_cast<std::size_t>(request.trials);
  const std::size_t chunks = (trials + request.chunk_frames - 1) / request.chunk_frames;
  const std::size_t tasks = G * chunks;
  std::vector<std::vector<Tally>> tallies(tasks, std::vector<Tally>(S));

  auto run_task = [&](std::size_t task) {
    const std::size_t g = task / chunks;
    const std::size_t c = task % chunks;
    const std::size_t counted = std::min(request.chunk_frames, trials - c * request.chunk_frames);
    const std::size_t first_frame = c * (request.chunk_frames + 1);
    auto source = factory(g, c, first_frame);
    const LinkBudget budget = link_budget(request.network, request.snr_db[g]);
    Stream impair_rng(StreamKey{request.seed, 0x696d70 + g, c});
    const bool noise = request.impairments.pilot_snr_db && !source->includes_estimation_noise();
    const bool phase = request.impairments.max_phase_error_deg.has_value();
    std::vector<FrameState> states(S);
    std::vector<FrameCsi> forecasts(3);
    auto& out = tallies[task];
    for (std::size_t f = 0; f <= counted; ++f) {
      const FrameCsi& raw = source->advance();
      const FrameCsi actual =
          phase ? apply_impairments(raw, request.impairments, impair_rng, CsiRole::Transmission) : raw;
      bool have[3] = {false, false, false};
      for (std::size_t s = 0; s < S; ++s) {
        const auto& spec = request.schemes[s];
        const auto q = static_cast<std::size_t>(spec.quality);
        if (spec.scheme != Scheme::Direct && !have[q]) {
          forecasts[q] = source->forecast(spec.quality);
          if (noise && spec.quality != CsiQuality::Perfect) {
            forecasts[q] = apply_impairments(std::move(forecasts[q]), request.impairments, impair_rng,
                                             CsiRole::Estimate);
          }
          have[q] = true;
        }
        states[s] = run_frame(spec, std::move(states[s]), actual, forecasts[q], request.network, budget);
        if (f == 0) continue;  // bootstrap frame
        const auto& o = states[s].outcome;
        auto& t = out[s];
        ++t.frames;
        t.outages += o.outage ? 1 : 0;
        t.collisions += states[s].collision ? 1 : 0;
        t.rate_sum += o.realized_rate;
        t.rate_sq += o.realized_rate * o.realized_rate;
      }
    }
  };

  unsigned workers = request.workers ? request.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks));
  if (workers <= 1) {
    for (std::size_t task = 0; task < tasks; ++task) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t task; (task = next.fetch_add(1)) < tasks && !failed.load();) {
          try {
            run_task(task);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<std::vector<McEstimate>> result(S, std::vector<McEstimate>(G));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t g = 0; g < G; ++g) {
      Tally sum;
      for (std::size_t c = 0; c < chunks; ++c) {
        const auto& t = tallies[g * chunks + c][s];
        sum.frames += t.frames;
        sum.outages += t.outages;
        sum.collisions += t.collisions;
        sum.rate_sum += t.rate_sum;
        sum.rate_sq += t.rate_sq;
      }
      McEstimate& e = result[s][g];
      const double n = static_cast<double>(sum.frames);
      e.trials = sum.frames;
      e.outage_prob = static_cast<double>(sum.outages) / n;
      e.std_error = binomial_std_error(e.outage_prob, sum.frames);
      e.mean_rate = sum.rate_sum / n;
      const double var = std::max(sum.rate_sq / n - e.mean_rate * e.mean_rate, 0.0);
      e.rate_std_error = std::sqrt(var / n);
      e.collision_rate = static_cast<double>(sum.collisions) / n;
    }
  }
  return result;
}

}  // namespace prs::sim
