#pragma once

// Channel descriptions shared by every other module: parallel Gaussian
// channels, degradation orders and degraded discrete memoryless channels.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rbc {

struct PerSubChannelPower {
  std::vector<double> caps;
};

struct TotalPower {
  double budget = 0.0;
};

using PowerConstraint = std::variant<PerSubChannelPower, TotalPower>;

/// Cloud-layer power per sub-channel. Same scale as the power caps.
struct PowerSplit {
  std::vector<double> q;
};

/// M independent real Gaussian sub-channels, K group-1 receivers and one
/// group-2 receiver. Variances are relative to unit signal scale.
class ParallelGaussianChannel {
public:
  /// `sigma_sq` is K rows of M group-1 variances; `delta_sq` has M entries.
  /// Throws ValidationError on empty dimensions, ragged rows, nonpositive or
  /// nonfinite variances and negative or nonfinite power caps.
  ParallelGaussianChannel(std::vector<std::vector<double>> sigma_sq,
                          std::vector<double> delta_sq, PowerConstraint power);

  std::size_t subchannels() const { return delta_sq_.size(); }
  std::size_t receivers() const { return sigma_sq_.size(); }

  double sigma_sq(std::size_t k, std::size_t i) const { return sigma_sq_[k][i]; }
  double delta_sq(std::size_t i) const { return delta_sq_[i]; }
  const std::vector<std::vector<double>>& sigma_sq() const { return sigma_sq_; }
  const std::vector<double>& delta_sq() const { return delta_sq_; }

  const PowerConstraint& power() const { return power_; }
  bool has_total_power() const { return std::holds_alternative<TotalPower>(power_); }

  /// Per-sub-channel caps P_i. Throws std::logic_error in total-power mode.
  std::span<const double> power_caps() const;
  /// Total budget P. Throws std::logic_error in per-sub-channel mode.
  double total_power() const;

  /// Same noise description under per-sub-channel caps `caps`.
  ParallelGaussianChannel with_power_caps(std::vector<double> caps) const;

private:
  std::vector<std::vector<double>> sigma_sq_;
  std::vector<double> delta_sq_;
  PowerConstraint power_;
};

/// Order of receivers on one sub-channel, strongest first. The group-2
/// receiver sits between positions cut-1 and cut.
struct SubChannelOrder {
  std::vector<std::size_t> perm;
  std::size_t cut = 0;

  bool operator==(const SubChannelOrder&) const = default;
};

struct DegradationOrder {
  std::vector<SubChannelOrder> subchannels;

  /// True iff receiver k precedes the group-2 receiver on sub-channel i.
  bool stronger_than_group2(std::size_t k, std::size_t i) const;

  bool operator==(const DegradationOrder&) const = default;
};

/// Sort receivers by ascending noise variance on each sub-channel. Receivers
/// whose variance equals delta_i^2 are placed after the group-2 receiver;
/// equal group-1 variances keep index order.
DegradationOrder infer_degradation_order(const ParallelGaussianChannel& channel);

struct PowerSplitCheck {
  bool ok = true;
  std::size_t index = 0;   // first violated sub-channel (0-based)
  double value = 0.0;      // offending value
  double bound = 0.0;      // bound it violates
  std::string message;

  explicit operator bool() const { return ok; }
};

/// Accepts iff 0 <= q_i <= P_i for every i. In total-power mode the caps are
/// taken from `allocation`, which must have M nonnegative entries summing to at
/// most the budget. Dimension mismatches throw ValidationError.
PowerSplitCheck validate_power_split(const ParallelGaussianChannel& channel,
                                     const PowerSplit& split,
                                     std::span<const double> allocation = {});

// ---------------------------------------------------------------------------
// Degraded discrete memoryless channels

/// One degraded broadcast sub-channel. Matrices are row-stochastic with one
/// row per input symbol.
struct DmcSubChannel {
  Eigen::MatrixXd group2;                  // |X| x |Z|
  std::vector<Eigen::MatrixXd> receivers;  // K matrices, |X| x |Y_k|
  SubChannelOrder order;
};

/// Parallel degraded DMC. The constructor checks that each matrix is
/// row-stochastic and that every link of the declared chain is a stochastic
/// degradation of the previous one (to 1e-9). Degrading maps are inferred by
/// nonnegative least squares; inconsistent chains are rejected.
class DegradedDMC {
public:
  static constexpr double kTolerance = 1e-9;

  explicit DegradedDMC(std::vector<DmcSubChannel> subchannels);

  std::size_t subchannels() const { return subs_.size(); }
  std::size_t receivers() const { return receivers_; }
  std::size_t input_size(std::size_t i) const { return subs_[i].group2.rows(); }

  const DmcSubChannel& subchannel(std::size_t i) const { return subs_[i]; }
  const Eigen::MatrixXd& receiver_matrix(std::size_t i, std::size_t k) const {
    return subs_[i].receivers[k];
  }
  const Eigen::MatrixXd& group2_matrix(std::size_t i) const { return subs_[i].group2; }
  DegradationOrder order() const;

  /// True iff y_k is upstream of z on sub-channel i.
  bool receiver_upstream(std::size_t i, std::size_t k) const;

  /// Stochastic map from the upstream member of the pair (y_k, z) to the
  /// downstream one on sub-channel i.
  const Eigen::MatrixXd& pair_map(std::size_t i, std::size_t k) const {
    return pair_maps_[i][k];
  }

  /// Maps between consecutive members of the chain on sub-channel i
  /// (K maps for K+1 outputs).
  const std::vector<Eigen::MatrixXd>& chain_maps(std::size_t i) const {
    return chain_maps_[i];
  }

  /// Joint law p(y_k, z | x) on sub-channel i as |X| matrices of size
  /// |Y_k| x |Z|, following the physical degradation.
  std::vector<Eigen::MatrixXd> pair_law(std::size_t i, std::size_t k) const;

private:
  std::vector<DmcSubChannel> subs_;
  std::size_t receivers_ = 0;
  std::vector<std::vector<Eigen::MatrixXd>> chain_maps_;
  std::vector<std::vector<Eigen::MatrixXd>> pair_maps_;
};

/// Infer a row-stochastic T with upstream * T = downstream. Returns the map
/// and writes the max entrywise violation (composition and row sums) to
/// `residual`.
Eigen::MatrixXd infer_degrading_map(const Eigen::MatrixXd& upstream,
                                    const Eigen::MatrixXd& downstream,
                                    double& residual);

}  // namespace rbc
