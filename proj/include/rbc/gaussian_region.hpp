#pragma once

// Capacity region of the parallel Gaussian channel: rate terms, region
// points, the R2-maximization program and its KKT certificate.

#include "rbc/channel.hpp"
#include "rbc/rate_pair.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbc::gaussian {

using rbc::RatePair;

/// [1/2 ln((Q+s)/s) - 1/2 ln((Q+d)/d)]^+ with s = sigma^2, d = delta^2.
double rate_term_a1(double q, double sigma_sq, double delta_sq);

/// [1/2 ln((P+d)/(Q+d)) - 1/2 ln((P+s)/(Q+s))]^+. Throws ValidationError when
/// Q > P.
double rate_term_a2(double p, double q, double sigma_sq, double delta_sq);

/// Per-receiver sums F_k = sum_i A1_{k,i} and G_k = sum_i A2_{k,i}.
struct ReceiverSums {
  std::vector<double> f;
  std::vector<double> g;
};

/// Power caps used for a region point: the channel caps, or `allocation` in
/// total-power mode (validated against the budget).
std::vector<double> effective_caps(const ParallelGaussianChannel& channel,
                                   std::span<const double> allocation = {});

ReceiverSums receiver_sums(const ParallelGaussianChannel& channel, std::span<const double> caps,
                           std::span<const double> q);

/// (min_k F_k, min_k G_k). Validates q against the caps.
RatePair region_point(const ParallelGaussianChannel& channel, const PowerSplit& q,
                      std::span<const double> allocation = {});

/// R1 at Q = P and R2 at Q = 0.
double r1_corner(const ParallelGaussianChannel& channel, std::span<const double> allocation = {});
double r2_corner(const ParallelGaussianChannel& channel, std::span<const double> allocation = {});

// ---------------------------------------------------------------------------
// KKT certificate

enum KktCondition : std::size_t {
  kStationarity = 0,      // KKT1, per sub-channel
  kNormalization = 1,     // KKT2
  kSlackRate1 = 2,        // KKT3
  kSlackRate2 = 3,        // KKT4
  kSlackLower = 4,        // KKT5
  kSlackUpper = 5,        // KKT6
  kDualRates = 6,         // KKT7
  kDualPower = 7,         // KKT8
};

struct KktResiduals {
  std::array<double, 8> condition{};  // max absolute violation of KKT1..KKT8
  double primal = 0.0;                // max violation of the program constraints

  double max() const;
};

/// Multipliers in the normalization of the stationarity condition
///   sum_{Y_i} alpha_k/(Q_i+s) + sum_{Z_i} beta_k/(Q_i+s) + M1_i
///     = (sum_{Y_i} alpha_k + sum_{Z_i} beta_k)/(Q_i+d) + M2_i.
struct KktCertificate {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> m1;
  std::vector<double> m2;
  KktResiduals residuals;
};

/// Evaluate the KKT system at (q, r2) for the target r1. `allocation` gives
/// the caps in total-power mode.
KktResiduals kkt_residuals(const ParallelGaussianChannel& channel, const PowerSplit& q,
                           const KktCertificate& certificate, double r1_target, double r2,
                           std::span<const double> allocation = {});

/// Recover multipliers on the constraints active at q (within `active_tol`)
/// by nonnegative least squares and fill in the residuals.
KktCertificate recover_certificate(const ParallelGaussianChannel& channel, const PowerSplit& q,
                                   double r1_target, double r2,
                                   std::span<const double> allocation = {},
                                   double active_tol = 1e-8);

// ---------------------------------------------------------------------------
// Boundary solver

struct SolverOptions {
  std::size_t grid_points = 33;        // per coordinate in the warm-start scan
  std::size_t grid_max_dim = 3;        // scan only when at most this many free Q_i
  int subgradient_iterations = 2000;
  double step_tolerance = 1e-9;        // max-norm change in Q
  double kkt_tolerance = 1e-6;
  std::optional<std::vector<double>> warm_start;  // skips the grid scan
};

struct BoundaryPoint {
  double r1_target = 0.0;
  PowerSplit q;
  RatePair rates;
  KktCertificate certificate;
  bool converged = false;
  int iterations = 0;
  std::string error;  // non-empty when the point could not be solved
};

/// Maximize R2 subject to R1 >= r1_target over the power split. Per-sub-channel
/// power mode only. Throws ValidationError when r1_target exceeds the R1 corner
/// by more than 1e-9 or is negative.
BoundaryPoint max_r2_given_r1(const ParallelGaussianChannel& channel, double r1_target,
                              const SolverOptions& options = {});

/// n_points targets evenly spaced on [0, R1 corner]; output sorted by R1.
/// Failing points carry an error message instead of aborting the sweep.
std::vector<BoundaryPoint> boundary_sweep(const ParallelGaussianChannel& channel,
                                          std::size_t n_points,
                                          const SolverOptions& options = {});

// ---------------------------------------------------------------------------
// Total power constraint

struct TotalPowerPoint {
  double r1_target = 0.0;
  std::vector<double> allocation;  // P_i
  PowerSplit q;
  RatePair rates;
  KktCertificate certificate;      // of the per-sub-channel program at `allocation`
  bool converged = false;
  std::string error;
};

struct TotalPowerOptions {
  SolverOptions inner;
  int outer_iterations = 150;
};

/// Allocation maximizing min_k F_k(P) with sum P <= budget (Q = P).
std::vector<double> r1_corner_allocation(const ParallelGaussianChannel& channel);
/// Allocation maximizing min_k G_k(P, 0) with sum P <= budget (Q = 0).
std::vector<double> r2_corner_allocation(const ParallelGaussianChannel& channel);

/// Best point with R1 >= r1_target under the total budget.
TotalPowerPoint total_power_point(const ParallelGaussianChannel& channel, double r1_target,
                                  const TotalPowerOptions& options = {});

/// n_points targets evenly spaced on [0, total-power R1 corner].
std::vector<TotalPowerPoint> total_power_region(const ParallelGaussianChannel& channel,
                                                std::size_t n_points,
                                                const TotalPowerOptions& options = {});

}  // namespace rbc::gaussian
