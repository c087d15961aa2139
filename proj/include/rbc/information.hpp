#pragma once

// Mutual informations of degraded discrete sub-channels under an auxiliary
// scheme u -> x -> (y_k, z).

#include "rbc/channel.hpp"
#include "rbc/rate_pair.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace rbc::dmc {

/// p(u) and p(x|u) on one sub-channel; px_given_u has one row per u.
struct SubScheme {
  std::vector<double> pu;
  Eigen::MatrixXd px_given_u;
};

struct AuxiliaryScheme {
  std::vector<SubScheme> subchannels;
};

/// Largest auxiliary alphabet allowed: |X| + 2K - 1.
std::size_t auxiliary_bound(std::size_t input_size, std::size_t receivers);

/// Throws ValidationError unless every distribution is nonnegative and sums to
/// one within 1e-12, the alphabets match the channel and |U| respects the bound.
void validate_scheme(const DegradedDMC& channel, const AuxiliaryScheme& scheme);

/// Information terms of one receiver on one sub-channel, in nats.
struct TermInformation {
  double x_y_given_uz = 0.0;  // I(x; y | u, z)
  double u_z_given_y = 0.0;   // I(u; z | y)
  double x_y_given_u = 0.0;   // I(x; y | u)
  double x_z_given_u = 0.0;   // I(x; z | u)
  double u_z = 0.0;           // I(u; z)
  double u_y = 0.0;           // I(u; y)
};

/// `law[x]` is p(y, z | x) as a |Y| x |Z| matrix.
TermInformation term_information(const std::vector<Eigen::MatrixXd>& law,
                                 const SubScheme& scheme);

/// Per-receiver sums over sub-channels of the two rate terms.
struct ReceiverTerms {
  std::vector<double> r1;  // sum_i I(x_i; y_ki | u_i, z_i)
  std::vector<double> r2;  // sum_i I(u_i; z_i | y_ki)
};

ReceiverTerms receiver_terms(const DegradedDMC& channel, const AuxiliaryScheme& scheme);

/// (min_k r1 sums, min_k r2 sums).
RatePair dmc_rate_pair(const DegradedDMC& channel, const AuxiliaryScheme& scheme);

}  // namespace rbc::dmc
