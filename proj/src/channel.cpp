#include "rbc/channel.hpp"

#include "rbc/error.hpp"
#include "rbc/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rbc {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }
bool nonnegative_finite(double v) { return std::isfinite(v) && v >= 0.0; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

ParallelGaussianChannel::ParallelGaussianChannel(std::vector<std::vector<double>> sigma_sq,
                                                 std::vector<double> delta_sq,
                                                 PowerConstraint power)
    : sigma_sq_(std::move(sigma_sq)), delta_sq_(std::move(delta_sq)), power_(std::move(power)) {
  const std::size_t m = delta_sq_.size();
  if (m == 0) throw ValidationError("channel needs at least one sub-channel (M >= 1)");
  if (sigma_sq_.empty()) throw ValidationError("channel needs at least one group-1 receiver (K >= 1)");
  for (std::size_t k = 0; k < sigma_sq_.size(); ++k) {
    if (sigma_sq_[k].size() != m)
      throw ValidationError("sigma_sq row " + std::to_string(k) + " has " +
                            std::to_string(sigma_sq_[k].size()) + " entries, expected M=" +
                            std::to_string(m));
    for (std::size_t i = 0; i < m; ++i)
      if (!positive_finite(sigma_sq_[k][i]))
        throw ValidationError("sigma_sq[" + std::to_string(k) + "][" + std::to_string(i) +
                              "] must be positive and finite");
  }
  for (std::size_t i = 0; i < m; ++i)
    if (!positive_finite(delta_sq_[i]))
      throw ValidationError("delta_sq[" + std::to_string(i) + "] must be positive and finite");

  if (const auto* caps = std::get_if<PerSubChannelPower>(&power_)) {
    if (caps->caps.size() != m)
      throw ValidationError("per-sub-channel power has " + std::to_string(caps->caps.size()) +
                            " caps, expected M=" + std::to_string(m));
    for (std::size_t i = 0; i < m; ++i)
      if (!nonnegative_finite(caps->caps[i]))
        throw ValidationError("power cap P[" + std::to_string(i) + "] must be nonnegative and finite");
  } else {
    const double budget = std::get<TotalPower>(power_).budget;
    if (!nonnegative_finite(budget))
      throw ValidationError("total power budget must be nonnegative and finite");
  }
}

std::span<const double> ParallelGaussianChannel::power_caps() const {
  const auto* caps = std::get_if<PerSubChannelPower>(&power_);
  if (!caps) throw std::logic_error("channel uses a total power constraint");
  return caps->caps;
}

double ParallelGaussianChannel::total_power() const {
  const auto* total = std::get_if<TotalPower>(&power_);
  if (!total) throw std::logic_error("channel uses per-sub-channel power caps");
  return total->budget;
}

ParallelGaussianChannel ParallelGaussianChannel::with_power_caps(std::vector<double> caps) const {
  return ParallelGaussianChannel(sigma_sq_, delta_sq_, PerSubChannelPower{std::move(caps)});
}

bool DegradationOrder::stronger_than_group2(std::size_t k, std::size_t i) const {
  const auto& sub = subchannels.at(i);
  for (std::size_t pos = 0; pos < sub.cut; ++pos)
    if (sub.perm[pos] == k) return true;
  return false;
}

DegradationOrder infer_degradation_order(const ParallelGaussianChannel& channel) {
  const std::size_t m = channel.subchannels();
  const std::size_t k_count = channel.receivers();
  DegradationOrder order;
  order.subchannels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto& sub = order.subchannels[i];
    sub.perm.resize(k_count);
    std::iota(sub.perm.begin(), sub.perm.end(), std::size_t{0});
    std::stable_sort(sub.perm.begin(), sub.perm.end(), [&](std::size_t a, std::size_t b) {
      return channel.sigma_sq(a, i) < channel.sigma_sq(b, i);
    });
    sub.cut = static_cast<std::size_t>(std::count_if(
        sub.perm.begin(), sub.perm.end(),
        [&](std::size_t k) { return channel.sigma_sq(k, i) < channel.delta_sq(i); }));
  }
  return order;
}

PowerSplitCheck validate_power_split(const ParallelGaussianChannel& channel,
                                     const PowerSplit& split,
                                     std::span<const double> allocation) {
  const std::size_t m = channel.subchannels();
  if (split.q.size() != m)
    throw ValidationError("power split has " + std::to_string(split.q.size()) +
                          " entries, expected M=" + std::to_string(m));

  PowerSplitCheck check;
  auto fail = [&](std::size_t i, double value, double bound, std::string what) {
    check.ok = false;
    check.index = i;
    check.value = value;
    check.bound = bound;
    check.message = std::move(what);
    return check;
  };

  std::span<const double> caps;
  if (channel.has_total_power()) {
    if (allocation.size() != m)
      throw ValidationError("total-power mode needs a power allocation with M=" +
                            std::to_string(m) + " entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(allocation[i] >= 0.0) || !std::isfinite(allocation[i]))
        return fail(i, allocation[i], 0.0,
                    "P[" + std::to_string(i) + "]=" + fmt_double(allocation[i]) +
                        " violates lower bound 0");
      sum += allocation[i];
    }
    if (sum > channel.total_power() * (1.0 + 1e-12))
      return fail(m, sum, channel.total_power(),
                  "sum of P=" + fmt_double(sum) + " exceeds total budget " +
                      fmt_double(channel.total_power()));
    caps = allocation;
  } else {
    caps = allocation.empty() ? channel.power_caps() : allocation;
    if (caps.size() != m) throw ValidationError("power allocation dimension mismatch");
  }

  for (std::size_t i = 0; i < m; ++i) {
    const double q = split.q[i];
    if (!(q >= 0.0) || !std::isfinite(q))
      return fail(i, q, 0.0,
                  "Q[" + std::to_string(i) + "]=" + fmt_double(q) + " violates lower bound 0");
    if (q > caps[i])
      return fail(i, q, caps[i],
                  "Q[" + std::to_string(i) + "]=" + fmt_double(q) + " exceeds upper bound P[" +
                      std::to_string(i) + "]=" + fmt_double(caps[i]));
  }
  return check;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd infer_degrading_map(const Eigen::MatrixXd& upstream,
                                    const Eigen::MatrixXd& downstream, double& residual) {
  if (upstream.rows() != downstream.rows())
    throw ValidationError("degrading map: input alphabet sizes differ");
  const Eigen::Index nx = upstream.rows();
  const Eigen::Index na = upstream.cols();
  const Eigen::Index nb = downstream.cols();

  // Unknown t(a,b) stored at a*nb + b.
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nx * nb + na, na * nb);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nx * nb + na);
  for (Eigen::Index x = 0; x < nx; ++x)
    for (Eigen::Index b = 0; b < nb; ++b) {
      const Eigen::Index row = x * nb + b;
      for (Eigen::Index a = 0; a < na; ++a) sys(row, a * nb + b) = upstream(x, a);
      rhs[row] = downstream(x, b);
    }
  for (Eigen::Index a = 0; a < na; ++a) {
    for (Eigen::Index b = 0; b < nb; ++b) sys(nx * nb + a, a * nb + b) = 1.0;
    rhs[nx * nb + a] = 1.0;
  }

  const NnlsResult sol = nnls(sys, rhs, 20 * static_cast<int>(na * nb) + 50, 1e-15);
  Eigen::MatrixXd t(na, nb);
  for (Eigen::Index a = 0; a < na; ++a)
    for (Eigen::Index b = 0; b < nb; ++b) t(a, b) = sol.x[a * nb + b];

  const double comp = (upstream * t - downstream).cwiseAbs().maxCoeff();
  const double rows = (t.rowwise().sum().array() - 1.0).abs().maxCoeff();
  residual = std::max(comp, rows);
  return t;
}

namespace {

void check_stochastic(const Eigen::MatrixXd& w, const std::string& name) {
  if (w.rows() == 0 || w.cols() == 0) throw ValidationError(name + " is empty");
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      if (!(w(r, c) >= 0.0) || !std::isfinite(w(r, c)))
        throw ValidationError(name + " has a negative or nonfinite entry in row " +
                              std::to_string(r));
      sum += w(r, c);
    }
    if (std::abs(sum - 1.0) > DegradedDMC::kTolerance)
      throw ValidationError(name + " row " + std::to_string(r) + " sums to " + fmt_double(sum));
  }
}

}  // namespace

DegradedDMC::DegradedDMC(std::vector<DmcSubChannel> subchannels) : subs_(std::move(subchannels)) {
  if (subs_.empty()) throw ValidationError("DMC needs at least one sub-channel");
  receivers_ = subs_.front().receivers.size();
  if (receivers_ == 0) throw ValidationError("DMC needs at least one group-1 receiver");

  chain_maps_.resize(subs_.size());
  pair_maps_.resize(subs_.size());
  for (std::size_t i = 0; i < subs_.size(); ++i) {
    const auto& sub = subs_[i];
    const std::string where = "sub-channel " + std::to_string(i);
    if (sub.receivers.size() != receivers_)
      throw ValidationError(where + " has a different number of receivers");
    check_stochastic(sub.group2, where + " group-2 matrix");
    for (std::size_t k = 0; k < receivers_; ++k) {
      if (sub.receivers[k].rows() != sub.group2.rows())
        throw ValidationError(where + " receiver " + std::to_string(k) +
                              " has a different input alphabet");
      check_stochastic(sub.receivers[k], where + " receiver " + std::to_string(k) + " matrix");
    }
    if (sub.order.perm.size() != receivers_ || sub.order.cut > receivers_)
      throw ValidationError(where + " degradation order has wrong size");
    std::vector<std::size_t> sorted = sub.order.perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < receivers_; ++k)
      if (sorted[k] != k) throw ValidationError(where + " degradation order is not a permutation");

    // Chain nodes: receivers before the cut, group 2 (index K), the rest.
    std::vector<std::size_t> nodes;
    for (std::size_t p = 0; p < sub.order.cut; ++p) nodes.push_back(sub.order.perm[p]);
    nodes.push_back(receivers_);
    for (std::size_t p = sub.order.cut; p < receivers_; ++p) nodes.push_back(sub.order.perm[p]);
    auto matrix_of = [&](std::size_t node) -> const Eigen::MatrixXd& {
      return node == receivers_ ? sub.group2 : sub.receivers[node];
    };

    for (std::size_t p = 0; p + 1 < nodes.size(); ++p) {
      double residual = 0.0;
      Eigen::MatrixXd t = infer_degrading_map(matrix_of(nodes[p]), matrix_of(nodes[p + 1]), residual);
      if (residual > kTolerance)
        throw ValidationError(where + ": output " + std::to_string(p + 1) +
                              " of the declared chain is not a degraded version of output " +
                              std::to_string(p) + " (residual " + fmt_double(residual) + ")");
      chain_maps_[i].push_back(std::move(t));
    }

    const std::size_t z_pos = sub.order.cut;
    pair_maps_[i].resize(receivers_);
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      if (p == z_pos) continue;
      const std::size_t lo = std::min(p, z_pos);
      const std::size_t hi = std::max(p, z_pos);
      Eigen::MatrixXd t = Eigen::MatrixXd::Identity(matrix_of(nodes[lo]).cols(),
                                                    matrix_of(nodes[lo]).cols());
      for (std::size_t s = lo; s < hi; ++s) t = t * chain_maps_[i][s];
      pair_maps_[i][nodes[p]] = std::move(t);
    }
  }
}

DegradationOrder DegradedDMC::order() const {
  DegradationOrder order;
  for (const auto& sub : subs_) order.subchannels.push_back(sub.order);
  return order;
}

bool DegradedDMC::receiver_upstream(std::size_t i, std::size_t k) const {
  const auto& sub = subs_[i].order;
  for (std::size_t p = 0; p < sub.cut; ++p)
    if (sub.perm[p] == k) return true;
  return false;
}

std::vector<Eigen::MatrixXd> DegradedDMC::pair_law(std::size_t i, std::size_t k) const {
  const auto& wy = subs_[i].receivers[k];
  const auto& wz = subs_[i].group2;
  const auto& t = pair_maps_[i][k];
  const bool up = receiver_upstream(i, k);
  std::vector<Eigen::MatrixXd> law;
  law.reserve(static_cast<std::size_t>(wy.rows()));
  for (Eigen::Index x = 0; x < wy.rows(); ++x) {
    Eigen::MatrixXd joint(wy.cols(), wz.cols());
    for (Eigen::Index y = 0; y < wy.cols(); ++y)
      for (Eigen::Index z = 0; z < wz.cols(); ++z)
        joint(y, z) = up ? wy(x, y) * t(y, z) : wz(x, z) * t(z, y);
    law.push_back(std::move(joint));
  }
  return law;
}

}  // namespace rbc
