#pragma once

// Grid inner approximation of the capacity region of a parallel degraded DMC
// by enumerating auxiliary schemes on a probability simplex lattice.

#include "rbc/channel.hpp"
#include "rbc/rate_pair.hpp"

#include <cstddef>
#include <vector>

namespace rbc::dmc {

/// Largest |X| * prod_k |Y_k| * |Z| accepted per sub-channel.
inline constexpr std::size_t kMaxJointStates = 64;

/// Throws SizeGuardError when a sub-channel exceeds kMaxJointStates.
void check_size_guard(const DegradedDMC& channel);

struct BruteForceOptions {
  std::size_t grid_steps = 8;      // probabilities are multiples of 1/grid_steps
  std::size_t max_grid_steps = 32;
  double tolerance = 1e-3;         // stop refining once the frontier moves less
  double scheme_budget = 2e7;      // max schemes enumerated per sub-channel and level
};

struct Frontier {
  std::vector<RatePair> points;  // Pareto staircase sorted by R1, both corners included
  std::size_t grid_steps = 0;    // lattice of the returned frontier
  double movement = 0.0;         // distance to the previous level (infinity if none)
  bool converged = false;
  std::size_t schemes = 0;       // schemes evaluated at the returned level
};

/// Frontier at a single lattice level.
Frontier dmc_frontier_at(const DegradedDMC& channel, std::size_t grid_steps);

/// Frontier with lattice doubling until the movement drops below the
/// tolerance or the budget is exhausted.
Frontier dmc_region_bruteforce(const DegradedDMC& channel, const BruteForceOptions& options = {});

/// Sup distance between the staircase functions of two frontiers, including
/// the difference in their R1 extent.
double frontier_distance(const std::vector<RatePair>& a, const std::vector<RatePair>& b);

/// Largest R2 on the staircase with R1 >= r1 (0 beyond the R1 corner).
double staircase_r2(const std::vector<RatePair>& frontier, double r1);

/// Number of schemes one sub-channel enumerates at a lattice level.
double scheme_count(std::size_t input_size, std::size_t aux_size, std::size_t grid_steps);

}  // namespace rbc::dmc
