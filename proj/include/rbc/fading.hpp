#pragma once

// Ergodic rates of block-fading channels: Monte Carlo estimates, the
// threshold policy, gain quantization and the time-sharing baseline.
// Gains are magnitude-squared values; rates are in nats.

#include "rbc/rate_pair.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace rbc::fading {

struct Exponential {
  double mean = 1.0;
};
struct Deterministic {
  double value = 1.0;
};
struct Gamma {
  double shape = 1.0;
  double scale = 1.0;
};

/// Distribution of one magnitude-squared gain.
using GainDistribution = std::variant<Exponential, Deterministic, Gamma>;

double sample_gain(const GainDistribution& d, std::mt19937_64& rng);
void validate_gain(const GainDistribution& d);
std::string describe(const GainDistribution& d);

struct FadingScenario {
  std::vector<GainDistribution> h;  // K group-1 receivers
  GainDistribution g;               // group-2 receiver
  double power = 1.0;               // average budget P
  std::uint64_t seed = 0;

  std::size_t receivers() const { return h.size(); }
};

/// K receivers and the group-2 receiver with unit-mean exponential gains.
FadingScenario rayleigh_scenario(std::size_t receivers, double power, std::uint64_t seed);
void validate_scenario(const FadingScenario& s);

// ---------------------------------------------------------------------------
// Quantization grid

/// Finite levels 0 = a_0 < ... < a_N = J. Each gain falls in one of N + 1
/// cells: [a_q, a_{q+1}) for q < N and [J, inf). Floors are a_q; ceilings are
/// a_{q+1}, infinite for the last cell.
class QuantGrid {
public:
  explicit QuantGrid(std::vector<double> levels);
  /// N + 1 levels uniform on [0, J].
  static QuantGrid uniform(std::size_t n, double j);

  std::size_t n() const { return levels_.size() - 1; }
  std::size_t cells() const { return levels_.size(); }
  const std::vector<double>& levels() const { return levels_; }

  std::size_t cell(double gain) const;
  double floor(std::size_t cell) const { return levels_[cell]; }
  double ceiling(std::size_t cell) const {
    return cell + 1 < levels_.size() ? levels_[cell + 1] : std::numeric_limits<double>::infinity();
  }

  /// Number of joint states for `gains` independent gains, (N+1)^gains.
  std::size_t states(std::size_t gains) const;
  /// State index of per-gain cells (receivers first, group 2 last).
  std::size_t state_index(const std::vector<std::size_t>& cells) const;
  std::vector<std::size_t> state_cells(std::size_t index, std::size_t gains) const;

private:
  std::vector<double> levels_;
};

// ---------------------------------------------------------------------------
// Power policies

/// Q = P when the group-2 gain is below theta, Q = 0 otherwise; P(h, g) = P.
struct Threshold {
  double theta = 0.0;
};

/// Per-state (P(s), Q(s)) on a grid with K + 1 gains.
struct Tabulated {
  QuantGrid grid;
  std::vector<double> p;
  std::vector<double> q;
};

using PowerPolicy = std::variant<Threshold, Tabulated>;

/// Threshold policy written on grid states; exact when theta is a grid level.
Tabulated tabulate_threshold(const QuantGrid& grid, std::size_t receivers, double theta, double power);

// ---------------------------------------------------------------------------
// Monte Carlo

inline constexpr std::size_t kBatches = 32;

struct McRates {
  RatePair rates;                    // min over k of the per-receiver means
  RatePair se;                       // batch-means standard errors of the minimizing receivers
  std::vector<double> r1_receiver;   // per-receiver means
  std::vector<double> r2_receiver;
  double mean_power = 0.0;
  double power_se = 0.0;
  bool power_warning = false;        // E[P] exceeds the budget by more than 3 standard errors
  std::size_t samples = 0;
};

McRates fading_rates_mc(const FadingScenario& scenario, const PowerPolicy& policy,
                        std::size_t n_samples);

McRates threshold_rates(const FadingScenario& scenario, double theta, std::size_t n_samples);

/// threshold_rates at every theta from one set of samples; entry j equals
/// threshold_rates(scenario, thetas[j], n_samples).
std::vector<McRates> threshold_sweep(const FadingScenario& scenario,
                                     const std::vector<double>& thetas, std::size_t n_samples);

// ---------------------------------------------------------------------------
// Quantized and finite-state rates

struct QuantizedOptions {
  std::size_t cell_mass_samples = 1'000'000;  // for non-exponential gains
};

/// Probability of each cell for one gain: closed form for exponential and
/// deterministic gains, Monte Carlo otherwise.
std::vector<double> cell_masses(const GainDistribution& d, const QuantGrid& grid,
                                std::uint64_t seed, std::size_t samples);

RatePair quantized_rates(const FadingScenario& scenario, const Tabulated& policy,
                         const QuantizedOptions& options = {});

/// One state of a finite-state scalar Gaussian channel.
struct WeightedState {
  double probability = 0.0;
  std::vector<double> sigma_sq;  // K group-1 noise variances
  double delta_sq = 1.0;
  double p = 0.0;
  double q = 0.0;
};

/// Probability-weighted sums of the real-Gaussian rate terms, min over k
/// outside the sums.
RatePair weighted_state_rates(const std::vector<WeightedState>& states);

RatePair time_sharing_baseline(const RatePair& corner1, const RatePair& corner2, double lambda);

// ---------------------------------------------------------------------------
// Threshold sweeps for several budgets

/// Thresholds -ln(1 - j/(n-1)), j = 0..n-1: unit-exponential quantiles from
/// 0 to infinity.
std::vector<double> quantile_thetas(std::size_t n);

struct SweepRow {
  double power = 0.0;
  double theta = 0.0;
  McRates rates;
};

struct ChordRow {
  double power = 0.0;
  double lambda = 0.0;
  RatePair rates;
};

struct Fig2Data {
  std::vector<SweepRow> curves;
  std::vector<ChordRow> chords;
};

/// K = 1 Rayleigh threshold curves for each budget plus time-sharing chords
/// between their corners (`chord_points` per budget).
Fig2Data fig2_sweep(const std::vector<double>& powers, const std::vector<double>& thetas,
                    std::size_t n_samples, std::uint64_t seed, std::size_t chord_points = 2);

}  // namespace rbc::fading
