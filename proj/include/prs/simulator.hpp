// SPDX-License-Identifier: Apache-2.0
//
// Frame-level relay selection procedures (distributed DF/AF with timers,
// centralized DF at the destination, OSTC pairs, direct transmission),
// CSI sources, impairments and the Monte-Carlo driver.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prs/channel.hpp"
#include "prs/predictor.hpp"
#include "prs/rng.hpp"
#include "prs/selection.hpp"

namespace prs::sim {

using channel::ComplexGain;
using selection::RelayId;
using selection::Scheme;
using selection::SelectionOutcome;

struct LinkCsi {
  ComplexGain sr;
  ComplexGain rd;
};

/// CSI of every link in one frame; relays[k] belongs to relay id k + 1.
struct FrameCsi {
  std::vector<LinkCsi> relays;
  ComplexGain sd;
};

enum class CsiQuality { Perfect, Outdated, Predicted };
enum class Relaying { Df, Af };
enum class SelectionMode { Distributed, Centralized };
enum class AfSnrModel { Bound, Exact };
enum class ReselectPolicy { Reselect, Terminate };
/// Where the synthetic AF correlation is imposed: on the end-to-end min-bound
/// gain (matches the closed form) or on each hop separately.
enum class AfCorrelation { EndToEnd, PerHop };

struct TimerModel {
  double c = 1.0;
  double max_duration = 1e3;
  double uncertainty = 0.0;

  /// min(c / magnitude, T_m).
  double duration(double magnitude) const;
  void validate() const;
};

struct NetworkConfig {
  std::size_t relays = 8;
  double target_rate = 1.0;
  double source_power_fraction = 0.5;
  double relay_power_fraction = 0.5;
  double noise_var = 1.0;
  Relaying relaying = Relaying::Df;
  SelectionMode selection = SelectionMode::Distributed;
  AfSnrModel af_snr = AfSnrModel::Bound;
  ReselectPolicy reselect = ReselectPolicy::Reselect;
  TimerModel timer;

  void validate() const;
};

/// Transmit powers for one SNR point, where SNR = P / noise.
struct LinkBudget {
  double source_power = 0.5;
  double relay_power = 0.5;
  double direct_power = 1.0;
  double noise_var = 1.0;
};
LinkBudget link_budget(const NetworkConfig& net, double snr_db);

struct ForecastBuffer {
  FrameCsi csi;
  std::int64_t written_at = -1;
};

struct FrameState {
  std::int64_t t = -1;
  FrameCsi actual;
  ForecastBuffer buffer;
  std::vector<RelayId> decoding_set;
  SelectionOutcome outcome;
  bool collision = false;
  /// Selection ran on current CSI because nothing was buffered yet.
  bool bootstrap = false;
};

// Each frame function advances `state` to frame t + 1 with `actual` as the
// CSI at transmission, selects from the buffer written at frame t, and then
// buffers `next_forecast` for the following frame.

FrameState run_distributed_df_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget);
FrameState run_distributed_af_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget);
FrameState run_centralized_df_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                                    const NetworkConfig& net, const LinkBudget& budget);
FrameState run_ostc_frame(FrameState state, const FrameCsi& actual, const FrameCsi& next_forecast,
                          const NetworkConfig& net, const LinkBudget& budget);
FrameState run_direct_frame(FrameState state, const FrameCsi& actual, const NetworkConfig& net,
                            const LinkBudget& budget);

struct ImpairmentConfig {
  std::optional<double> pilot_snr_db;
  std::optional<double> max_phase_error_deg;

  bool active() const { return pilot_snr_db.has_value() || max_phase_error_deg.has_value(); }
};

enum class CsiRole { Estimate, Transmission };

/// Estimate role: h + e, e ~ CN(0, mean_power 10^{-pilot/10}).
/// Transmission role: h cos(theta_e), theta_e ~ U(-theta, theta).
FrameCsi apply_impairments(FrameCsi csi, const ImpairmentConfig& cfg, Stream& rng, CsiRole role,
                           double mean_power = 1.0);

class CsiSource {
 public:
  virtual ~CsiSource() = default;
  virtual std::size_t num_relays() const = 0;
  /// Moves to the next frame and returns its actual CSI.
  virtual const FrameCsi& advance() = 0;
  /// Forecast of the next frame's CSI available at the current frame.
  virtual const FrameCsi& forecast(CsiQuality quality) = 0;
  /// True when the source already folds pilot noise into its observations.
  virtual bool includes_estimation_noise() const { return false; }
};

/// Frames are independent; forecasts are drawn at exact correlation.
struct SyntheticCsiConfig {
  std::size_t relays = 8;
  double rho_outdated = 1.0;
  double rho_predicted = 1.0;
  Relaying relaying = Relaying::Df;
  AfCorrelation af_correlation = AfCorrelation::EndToEnd;
  /// Relative hop powers, used to spread an end-to-end AF forecast over hops.
  double sr_weight = 0.5;
  double rd_weight = 0.5;
  bool need_outdated = true;
  bool need_predicted = true;
};

class SyntheticCsiSource final : public CsiSource {
 public:
  SyntheticCsiSource(const SyntheticCsiConfig& cfg, const StreamKey& key);
  std::size_t num_relays() const override { return cfg_.relays; }
  const FrameCsi& advance() override;
  const FrameCsi& forecast(CsiQuality quality) override;

 private:
  FrameCsi draw_frame();
  void draw_forecast(FrameCsi& out, double rho);

  SyntheticCsiConfig cfg_;
  Stream rng_;
  bool started_ = false;
  FrameCsi current_;
  FrameCsi next_;
  FrameCsi outdated_;
  FrameCsi predicted_;
};

/// Channel series for every link plus their predictions, shared by all
/// sources cut from it. Frames are `spacing` samples apart.
struct TimeSeriesData {
  std::vector<channel::GainSeries> sr;
  std::vector<channel::GainSeries> rd;
  channel::GainSeries sd;
  /// Observed (possibly noisy) versions used for outdated CSI.
  std::vector<channel::GainSeries> sr_observed;
  std::vector<channel::GainSeries> rd_observed;
  std::vector<channel::GainSeries> sr_predicted;
  std::vector<channel::GainSeries> rd_predicted;
  std::size_t spacing = 1;
  std::size_t first_sample = 0;
  bool noisy = false;
  double rho_predicted = 0.0;

  std::size_t frames_available() const;
};

struct TimeSeriesBuild {
  std::size_t relays = 8;
  std::size_t frames = 1000;
  channel::FadingProcessConfig fading;
  ImpairmentConfig impairments;
  /// AF selection also needs forecasts of the source hops.
  bool predict_source_hop = false;
};

/// Generates 2K + 1 series, adds pilot noise to the observations when set
/// and runs the predictor over every relay link.
std::shared_ptr<const TimeSeriesData> build_time_series(const TimeSeriesBuild& build,
                                                        predictor::PredictorModel& model);

class TimeSeriesCsiSource final : public CsiSource {
 public:
  TimeSeriesCsiSource(std::shared_ptr<const TimeSeriesData> data, std::size_t first_frame);
  std::size_t num_relays() const override { return data_->rd.size(); }
  const FrameCsi& advance() override;
  const FrameCsi& forecast(CsiQuality quality) override;
  bool includes_estimation_noise() const override { return data_->noisy; }

 private:
  void fill(FrameCsi& out, std::size_t sample, int which);

  std::shared_ptr<const TimeSeriesData> data_;
  std::size_t frame_;
  bool started_ = false;
  FrameCsi current_;
  FrameCsi scratch_;
};

struct SchemeSpec {
  Scheme scheme = Scheme::Prs;
  CsiQuality quality = CsiQuality::Predicted;
  std::string label;
};

/// "ORS", "ORS-perfect", "PRS", "OSTC", "DT" with their usual CSI.
SchemeSpec scheme_from_label(const std::string& label);

/// Runs one frame of `spec` on `net`'s relaying and selection mode.
FrameState run_frame(const SchemeSpec& spec, FrameState state, const FrameCsi& actual,
                     const FrameCsi& next_forecast, const NetworkConfig& net, const LinkBudget& budget);

struct McEstimate {
  std::int64_t trials = 0;
  double outage_prob = 0.0;
  double std_error = 0.0;
  double mean_rate = 0.0;
  double rate_std_error = 0.0;
  double collision_rate = 0.0;
};

/// sqrt(p (1 - p) / n).
double binomial_std_error(double p, std::int64_t n);

struct EstimateRequest {
  std::vector<SchemeSpec> schemes;
  NetworkConfig network;
  std::vector<double> snr_db;
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;
  ImpairmentConfig impairments;
  std::size_t chunk_frames = 1 << 16;
  unsigned workers = 0;  // 0: hardware concurrency
};

/// Builds the CSI source for one (grid point, chunk). `first_frame` is the
/// global frame offset of the chunk.
using SourceFactory =
    std::function<std::unique_ptr<CsiSource>(std::size_t grid_index, std::size_t chunk, std::size_t first_frame)>;

SourceFactory synthetic_factory(const SyntheticCsiConfig& cfg, std::uint64_t seed);
/// Same frames for every grid point; chunks cut consecutive frame ranges.
SourceFactory time_series_factory(std::shared_ptr<const TimeSeriesData> data);

/// Frames needed by estimate(): trials plus one bootstrap frame per chunk.
std::size_t frames_required(std::int64_t trials, std::size_t chunk_frames);

/// Result indexed [scheme][snr point]. Each chunk starts with one bootstrap
/// frame that is not counted. Deterministic for a given request.
std::vector<std::vector<McEstimate>> estimate(const EstimateRequest& request, const SourceFactory& factory);

}  // namespace prs::sim
