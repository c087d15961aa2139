#include "rbc/error.hpp"
#include "rbc/gaussian_region.hpp"
#include "rbc/nnls.hpp"

#include <algorithm>
#include <cmath>

namespace rbc::gaussian {

double KktResiduals::max() const {
  double v = primal;
  for (double c : condition) v = std::max(v, c);
  return v;
}

namespace {

// Coefficient of alpha_k / beta_k in the stationarity row of sub-channel i.
double stationarity_coeff(double q, double s, double d) { return 1.0 / (q + s) - 1.0 / (q + d); }

void check_sizes(const ParallelGaussianChannel& channel, const KktCertificate& c) {
  if (c.alpha.size() != channel.receivers() || c.beta.size() != channel.receivers() ||
      c.m1.size() != channel.subchannels() || c.m2.size() != channel.subchannels())
    throw ValidationError("certificate dimensions do not match the channel");
}

}  // namespace

KktResiduals kkt_residuals(const ParallelGaussianChannel& channel, const PowerSplit& q,
                           const KktCertificate& cert, double r1_target, double r2,
                           std::span<const double> allocation) {
  check_sizes(channel, cert);
  const std::size_t m = channel.subchannels();
  const std::size_t kc = channel.receivers();
  const auto caps = effective_caps(channel, allocation);
  if (q.q.size() != m) throw ValidationError("power split dimension mismatch");

  KktResiduals res;
  auto bump = [&](KktCondition c, double v) {
    res.condition[c] = std::max(res.condition[c], std::abs(v));
  };

  std::vector<double> qc(m);
  for (std::size_t i = 0; i < m; ++i) {
    qc[i] = std::clamp(q.q[i], 0.0, caps[i]);
    res.primal = std::max({res.primal, -q.q[i], q.q[i] - caps[i]});
  }
  const auto sums = receiver_sums(channel, caps, qc);

  for (std::size_t i = 0; i < m; ++i) {
    const double d = channel.delta_sq(i);
    double lhs = cert.m1[i];
    double rhs = cert.m2[i];
    double weight = 0.0;
    for (std::size_t k = 0; k < kc; ++k) {
      const double s = channel.sigma_sq(k, i);
      if (s < d) {
        lhs += cert.alpha[k] / (qc[i] + s);
        weight += cert.alpha[k];
      } else if (s > d) {
        lhs += cert.beta[k] / (qc[i] + s);
        weight += cert.beta[k];
      }
    }
    rhs += weight / (qc[i] + d);
    bump(kStationarity, lhs - rhs);
    bump(kSlackLower, cert.m1[i] * qc[i]);
    bump(kSlackUpper, cert.m2[i] * (caps[i] - qc[i]));
    bump(kDualPower, std::max({0.0, -cert.m1[i], -cert.m2[i]}));
  }

  double beta_sum = 0.0;
  for (std::size_t k = 0; k < kc; ++k) {
    beta_sum += cert.beta[k];
    bump(kSlackRate1, cert.alpha[k] * (sums.f[k] - r1_target));
    bump(kSlackRate2, cert.beta[k] * (sums.g[k] - r2));
    bump(kDualRates, std::max({0.0, -cert.alpha[k], -cert.beta[k]}));
    res.primal = std::max({res.primal, r1_target - sums.f[k], r2 - sums.g[k]});
  }
  bump(kNormalization, beta_sum - 1.0);
  res.primal = std::max(res.primal, 0.0);
  return res;
}

KktCertificate recover_certificate(const ParallelGaussianChannel& channel, const PowerSplit& q,
                                   double r1_target, double r2,
                                   std::span<const double> allocation, double active_tol) {
  const std::size_t m = channel.subchannels();
  const std::size_t kc = channel.receivers();
  const auto caps = effective_caps(channel, allocation);
  if (q.q.size() != m) throw ValidationError("power split dimension mismatch");
  const auto sums = receiver_sums(channel, caps, q.q);

  // Column kinds: 0 alpha_k, 1 beta_k, 2 M1_i, 3 M2_i.
  struct Column {
    int kind;
    std::size_t index;
  };
  std::vector<Column> cols;
  if (r1_target > 0.0)
    for (std::size_t k = 0; k < kc; ++k)
      if (sums.f[k] - r1_target <= active_tol * (1.0 + std::abs(r1_target))) cols.push_back({0, k});
  for (std::size_t k = 0; k < kc; ++k)
    if (sums.g[k] - r2 <= active_tol * (1.0 + std::abs(r2))) cols.push_back({1, k});
  for (std::size_t i = 0; i < m; ++i) {
    const double scale = active_tol * std::max(1.0, caps[i]);
    if (q.q[i] <= scale) cols.push_back({2, i});
    if (caps[i] - q.q[i] <= scale) cols.push_back({3, i});
  }

  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) + 1, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) + 1);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Column& col = cols[static_cast<std::size_t>(c)];
    if (col.kind == 2) {
      a(static_cast<Eigen::Index>(col.index), c) = 1.0;
      continue;
    }
    if (col.kind == 3) {
      a(static_cast<Eigen::Index>(col.index), c) = -1.0;
      continue;
    }
    const std::size_t k = col.index;
    for (std::size_t i = 0; i < m; ++i) {
      const double s = channel.sigma_sq(k, i);
      const double d = channel.delta_sq(i);
      const bool counts = col.kind == 0 ? s < d : s > d;
      if (counts) a(static_cast<Eigen::Index>(i), c) = stationarity_coeff(q.q[i], s, d);
    }
  }
  const double weight = 1.0 + (n > 0 ? a.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index c = 0; c < n; ++c)
    if (cols[static_cast<std::size_t>(c)].kind == 1) a(static_cast<Eigen::Index>(m), c) = weight;
  b[static_cast<Eigen::Index>(m)] = weight;

  const NnlsResult sol = nnls(a, b, 0, 1e-15);

  KktCertificate cert;
  cert.alpha.assign(kc, 0.0);
  cert.beta.assign(kc, 0.0);
  cert.m1.assign(m, 0.0);
  cert.m2.assign(m, 0.0);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Column& col = cols[static_cast<std::size_t>(c)];
    const double v = sol.x[c];
    switch (col.kind) {
      case 0: cert.alpha[col.index] = v; break;
      case 1: cert.beta[col.index] = v; break;
      case 2: cert.m1[col.index] = v; break;
      default: cert.m2[col.index] = v; break;
    }
  }
  // Stationarity is homogeneous in the multipliers, so rescaling makes the
  // normalization exact without changing which balance was found.
  double beta_sum = 0.0;
  for (double v : cert.beta) beta_sum += v;
  if (beta_sum > 0.0)
    for (auto* vec : {&cert.alpha, &cert.beta, &cert.m1, &cert.m2})
      for (double& v : *vec) v /= beta_sum;
  cert.residuals = kkt_residuals(channel, q, cert, r1_target, r2, allocation);
  return cert;
}

}  // namespace rbc::gaussian
