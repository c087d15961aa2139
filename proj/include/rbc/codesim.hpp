#pragma once

// Toy-scale superposition code: product cloud codebooks binned for message 2
// and multicast satellite books for message 1, with maximum-likelihood
// decoding, exact leakage and a conditional-independence test.

#include "rbc/channel.hpp"
#include "rbc/information.hpp"
#include "rbc/rate_pair.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rbc::codesim {

inline constexpr std::size_t kMaxBlocklength = 14;
/// Per sub-channel and output, (|X| * |output|)^n may not exceed this.
inline constexpr double kExactGuard = 16777216.0;  // 2^24

struct ToyCodeConfig {
  std::size_t n = 12;
  double r1 = 0.0;                // target rates in nats per symbol
  double r2 = 0.0;
  double epsilon = 0.02;          // slack in nats
  std::uint64_t seed = 0;
  bool binning = true;            // false: one sequence per bin, R2 = sum of cloud bits / n
  int satellite_extra_bits = 0;   // enlarge every satellite book by 2^extra
  bool shared_index = false;      // all sub-channels reuse one cloud index (breaks independence)
};

/// Codebook sizes as bit exponents.
struct CodeSizes {
  std::vector<int> cloud_bits;      // N_{2,i}
  std::vector<int> satellite_bits;  // log2 L_{1,i}
  int m1_bits = 0;                  // n R1 in bits
  int m2_bits = 0;                  // n R2 in bits (number of bins = 2^m2_bits)
  int bin_bits = 0;                 // log2 L2

  int total_cloud_bits() const;
};

/// round-half-up of x.
int round_half_up(double x);

/// Scheme informations used for sizing, per sub-channel.
struct SchemeInfo {
  std::vector<double> u_z;          // I(u_i; z_i)
  std::vector<double> x_z_given_u;  // I(x_i; z_i | u_i)
  RatePair region;                  // dmc_rate_pair of the scheme
};

SchemeInfo scheme_info(const DegradedDMC& channel, const dmc::AuxiliaryScheme& scheme);

/// Sizes from the informations, the targets and the slack. Throws
/// ValidationError when the bins would hold fewer than one sequence.
CodeSizes code_sizes(const SchemeInfo& info, const ToyCodeConfig& config);

class ToyCode {
public:
  const DegradedDMC& channel() const { return channel_; }
  const ToyCodeConfig& config() const { return config_; }
  const CodeSizes& sizes() const { return sizes_; }
  const SchemeInfo& info() const { return info_; }

  std::size_t subchannels() const { return clouds_.size(); }
  std::size_t m1_count() const { return std::size_t{1} << sizes_.m1_bits; }
  std::size_t bins() const { return std::size_t{1} << sizes_.m2_bits; }
  std::size_t bin_size() const { return std::size_t{1} << sizes_.bin_bits; }
  std::size_t clouds(std::size_t i) const { return std::size_t{1} << sizes_.cloud_bits[i]; }
  std::size_t satellites(std::size_t i) const { return std::size_t{1} << sizes_.satellite_bits[i]; }
  std::size_t tuples() const { return std::size_t{1} << sizes_.total_cloud_bits(); }

  /// Cloud codeword u_i^n(a).
  const std::uint8_t* cloud(std::size_t i, std::size_t a) const;
  /// Satellite codeword l of C_{1,i}(u_i^n(a), m1).
  const std::uint8_t* satellite(std::size_t i, std::size_t a, std::size_t m1, std::size_t l) const;

  /// Cloud indices (a_1..a_M) of a tuple of M2, first sub-channel most significant.
  std::vector<std::size_t> tuple_indices(std::size_t tuple) const;
  std::size_t tuple_of(const std::vector<std::size_t>& indices) const;
  std::size_t bin_of(std::size_t tuple) const { return bin_of_[tuple]; }
  const std::vector<std::uint32_t>& bin_members(std::size_t bin) const { return members_[bin]; }

  /// FNV-1a digest of every codeword and the bin map.
  std::uint64_t digest() const;

private:
  friend ToyCode build_code(const DegradedDMC&, const dmc::AuxiliaryScheme&, const ToyCodeConfig&);
  ToyCode(DegradedDMC channel) : channel_(std::move(channel)) {}

  DegradedDMC channel_;
  ToyCodeConfig config_;
  CodeSizes sizes_;
  SchemeInfo info_;
  std::vector<std::vector<std::uint8_t>> clouds_;      // [i][a * n + t]
  std::vector<std::vector<std::uint8_t>> satellites_;  // [i][((a * |M1| + m1) * L1 + l) * n + t]
  std::vector<std::uint32_t> bin_of_;
  std::vector<std::vector<std::uint32_t>> members_;
};

/// Draw all codebooks and the bin map. Deterministic given the seed.
ToyCode build_code(const DegradedDMC& channel, const dmc::AuxiliaryScheme& scheme,
                   const ToyCodeConfig& config);

struct Encoding {
  std::size_t tuple = 0;
  std::vector<std::size_t> cloud;      // a_i
  std::vector<std::size_t> satellite;  // l_i
  std::vector<std::vector<std::uint8_t>> words;  // x_i^n
};

Encoding encode(const ToyCode& code, std::size_t m1, std::size_t m2, std::mt19937_64& rng);

/// Uniform integer in [0, n) by rejection; independent of the library's
/// distribution implementations.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(std::mt19937_64& rng);

struct SimReport {
  std::vector<double> group1_error;  // per receiver
  double group2_error = 0.0;
  std::size_t trials = 0;
};

/// Random messages through the channel; receivers decode by maximum
/// likelihood. Receiver k uses only sub-channels where it is stronger than
/// group 2.
SimReport simulate(const ToyCode& code, std::size_t trials);

struct Leakage {
  double m1_z = 0.0;           // I(m1; z block) / n
  std::vector<double> m2_y;    // I(m2; y_k block) / n per receiver
};

/// Exact mutual informations by enumerating every output block. Throws
/// SizeGuardError when the enumeration is too large.
Leakage exact_leakage(const ToyCode& code);

struct IndependenceReport {
  std::vector<double> p_values;  // per m1
  std::vector<double> g_stats;
  std::vector<double> dof;
  double min_p = 1.0;
  double adjusted_p = 1.0;       // Bonferroni over m1 values
  bool rejected = false;         // adjusted_p < 0.01
  std::size_t draws = 0;
};

/// G-test of x_1^n .. x_M^n mutually independent given m1.
IndependenceReport check_conditional_independence(const ToyCode& code, std::size_t draws);

/// p-value of a G-test of mutual independence on observed category labels
/// (one label vector per variable, equal lengths); writes G and the degrees
/// of freedom.
double g_test_independence(const std::vector<std::vector<std::size_t>>& labels, double& g, double& dof);

}  // namespace rbc::codesim
