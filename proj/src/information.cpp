#include "rbc/information.hpp"

#include "rbc/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace rbc::dmc {

namespace {

constexpr double kZero = 1e-15;
constexpr double kStochastic = 1e-12;

void check_distribution(const double* p, Eigen::Index n, Eigen::Index stride, const std::string& what) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = p[j * stride];
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(what + " has a negative or nonfinite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochastic) throw ValidationError(what + " does not sum to 1");
}

// Joint law over (u, x, y, z) and entropies of its marginals.
class Joint {
public:
  Joint(const std::vector<Eigen::MatrixXd>& law, const SubScheme& s)
      : dims_{s.pu.size(), static_cast<std::size_t>(s.px_given_u.cols()),
              static_cast<std::size_t>(law.front().rows()),
              static_cast<std::size_t>(law.front().cols())} {
    p_.assign(dims_[0] * dims_[1] * dims_[2] * dims_[3], 0.0);
    std::size_t at = 0;
    for (std::size_t u = 0; u < dims_[0]; ++u)
      for (std::size_t x = 0; x < dims_[1]; ++x) {
        const double pux = s.pu[u] * s.px_given_u(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(x));
        const Eigen::MatrixXd& w = law[x];
        for (std::size_t y = 0; y < dims_[2]; ++y)
          for (std::size_t z = 0; z < dims_[3]; ++z)
            p_[at++] = pux * w(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(z));
      }
  }

  // Entropy of the marginal on the coordinates whose bit is set
  // (1 = u, 2 = x, 4 = y, 8 = z).
  double entropy(unsigned mask) {
    std::size_t size = 1;
    for (std::size_t d = 0; d < 4; ++d)
      if (mask & (1u << d)) size *= dims_[d];
    marginal_.assign(size, 0.0);
    std::size_t at = 0;
    std::array<std::size_t, 4> idx{};
    for (idx[0] = 0; idx[0] < dims_[0]; ++idx[0])
      for (idx[1] = 0; idx[1] < dims_[1]; ++idx[1])
        for (idx[2] = 0; idx[2] < dims_[2]; ++idx[2])
          for (idx[3] = 0; idx[3] < dims_[3]; ++idx[3]) {
            std::size_t key = 0;
            for (std::size_t d = 0; d < 4; ++d)
              if (mask & (1u << d)) key = key * dims_[d] + idx[d];
            marginal_[key] += p_[at++];
          }
    double h = 0.0;
    for (double v : marginal_)
      if (v > kZero) h -= v * std::log(v);
    return h;
  }

private:
  std::array<std::size_t, 4> dims_;
  std::vector<double> p_;
  std::vector<double> marginal_;
};

constexpr unsigned U = 1, X = 2, Y = 4, Z = 8;

double nonneg(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

std::size_t auxiliary_bound(std::size_t input_size, std::size_t receivers) {
  return input_size + 2 * receivers - 1;
}

void validate_scheme(const DegradedDMC& channel, const AuxiliaryScheme& scheme) {
  if (scheme.subchannels.size() != channel.subchannels())
    throw ValidationError("scheme has " + std::to_string(scheme.subchannels.size()) +
                          " sub-channels, channel has " + std::to_string(channel.subchannels()));
  for (std::size_t i = 0; i < channel.subchannels(); ++i) {
    const SubScheme& s = scheme.subchannels[i];
    const std::string where = "sub-channel " + std::to_string(i);
    if (s.pu.empty()) throw ValidationError(where + ": empty auxiliary alphabet");
    if (s.pu.size() > auxiliary_bound(channel.input_size(i), channel.receivers()))
      throw ValidationError(where + ": auxiliary alphabet exceeds |X| + 2K - 1");
    if (static_cast<std::size_t>(s.px_given_u.rows()) != s.pu.size() ||
        static_cast<std::size_t>(s.px_given_u.cols()) != channel.input_size(i))
      throw ValidationError(where + ": p(x|u) has the wrong shape");
    check_distribution(s.pu.data(), static_cast<Eigen::Index>(s.pu.size()), 1, where + " p(u)");
    for (Eigen::Index u = 0; u < s.px_given_u.rows(); ++u) {
      const Eigen::VectorXd row = s.px_given_u.row(u).transpose();
      check_distribution(row.data(), row.size(), 1, where + " p(x|u) row " + std::to_string(u));
    }
  }
}

TermInformation term_information(const std::vector<Eigen::MatrixXd>& law, const SubScheme& scheme) {
  Joint j(law, scheme);
  const double h_u = j.entropy(U);
  const double h_y = j.entropy(Y);
  const double h_z = j.entropy(Z);
  const double h_ux = j.entropy(U | X);
  const double h_uy = j.entropy(U | Y);
  const double h_uz = j.entropy(U | Z);
  const double h_yz = j.entropy(Y | Z);
  const double h_uxy = j.entropy(U | X | Y);
  const double h_uxz = j.entropy(U | X | Z);
  const double h_uyz = j.entropy(U | Y | Z);
  const double h_all = j.entropy(U | X | Y | Z);

  TermInformation t;
  t.x_y_given_uz = nonneg(h_uxz + h_uyz - h_all - h_uz);
  t.u_z_given_y = nonneg(h_uy + h_yz - h_uyz - h_y);
  t.x_y_given_u = nonneg(h_ux + h_uy - h_uxy - h_u);
  t.x_z_given_u = nonneg(h_ux + h_uz - h_uxz - h_u);
  t.u_z = nonneg(h_u + h_z - h_uz);
  t.u_y = nonneg(h_u + h_y - h_uy);
  return t;
}

ReceiverTerms receiver_terms(const DegradedDMC& channel, const AuxiliaryScheme& scheme) {
  validate_scheme(channel, scheme);
  const std::size_t kc = channel.receivers();
  ReceiverTerms out{std::vector<double>(kc, 0.0), std::vector<double>(kc, 0.0)};
  for (std::size_t i = 0; i < channel.subchannels(); ++i)
    for (std::size_t k = 0; k < kc; ++k) {
      const TermInformation t = term_information(channel.pair_law(i, k), scheme.subchannels[i]);
      out.r1[k] += t.x_y_given_uz;
      out.r2[k] += t.u_z_given_y;
    }
  return out;
}

RatePair dmc_rate_pair(const DegradedDMC& channel, const AuxiliaryScheme& scheme) {
  const ReceiverTerms t = receiver_terms(channel, scheme);
  return {*std::min_element(t.r1.begin(), t.r1.end()), *std::min_element(t.r2.begin(), t.r2.end())};
}

}  // namespace rbc::dmc
