#include "rbc/gaussian_region.hpp"

#include "rbc/error.hpp"
#include "rbc/interior_point.hpp"
#include "rbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rbc::gaussian {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

// Shared derivative of A1 on Y_i and of A2 on Z_i with respect to Q.
double slope(double q, double s, double d) { return 0.5 * (1.0 / (q + s) - 1.0 / (q + d)); }
double curvature(double q, double s, double d) {
  return 0.5 * (1.0 / ((q + d) * (q + d)) - 1.0 / ((q + s) * (q + s)));
}

}  // namespace

double rate_term_a1(double q, double sigma_sq, double delta_sq) {
  require_finite(q, "Q");
  require_finite(sigma_sq, "sigma^2");
  require_finite(delta_sq, "delta^2");
  if (q < 0.0) throw ValidationError("Q must be nonnegative");
  if (!(sigma_sq > 0.0) || !(delta_sq > 0.0)) throw ValidationError("variances must be positive");
  const double v = 0.5 * std::log1p(q / sigma_sq) - 0.5 * std::log1p(q / delta_sq);
  return v > 0.0 ? v : 0.0;
}

double rate_term_a2(double p, double q, double sigma_sq, double delta_sq) {
  require_finite(p, "P");
  require_finite(q, "Q");
  require_finite(sigma_sq, "sigma^2");
  require_finite(delta_sq, "delta^2");
  if (q < 0.0) throw ValidationError("Q must be nonnegative");
  if (q > p) throw ValidationError("Q must not exceed P");
  if (!(sigma_sq > 0.0) || !(delta_sq > 0.0)) throw ValidationError("variances must be positive");
  const double gap = p - q;
  const double v = 0.5 * std::log1p(gap / (q + delta_sq)) - 0.5 * std::log1p(gap / (q + sigma_sq));
  return v > 0.0 ? v : 0.0;
}

std::vector<double> effective_caps(const ParallelGaussianChannel& channel,
                                   std::span<const double> allocation) {
  if (!channel.has_total_power()) {
    if (allocation.empty()) {
      auto caps = channel.power_caps();
      return {caps.begin(), caps.end()};
    }
    if (allocation.size() != channel.subchannels())
      throw ValidationError("power allocation dimension mismatch");
    return {allocation.begin(), allocation.end()};
  }
  if (allocation.size() != channel.subchannels())
    throw ValidationError("total-power mode needs a power allocation with M=" +
                          std::to_string(channel.subchannels()) + " entries");
  double sum = 0.0;
  for (double p : allocation) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ValidationError("power allocation entries must be nonnegative and finite");
    sum += p;
  }
  if (sum > channel.total_power() * (1.0 + 1e-12))
    throw ValidationError("power allocation exceeds the total budget");
  return {allocation.begin(), allocation.end()};
}

ReceiverSums receiver_sums(const ParallelGaussianChannel& channel, std::span<const double> caps,
                           std::span<const double> q) {
  const std::size_t m = channel.subchannels();
  const std::size_t k_count = channel.receivers();
  if (q.size() != m || caps.size() != m) throw ValidationError("dimension mismatch");
  ReceiverSums sums{std::vector<double>(k_count, 0.0), std::vector<double>(k_count, 0.0)};
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      const double s = channel.sigma_sq(k, i);
      const double d = channel.delta_sq(i);
      sums.f[k] += rate_term_a1(q[i], s, d);
      sums.g[k] += rate_term_a2(caps[i], q[i], s, d);
    }
  return sums;
}

RatePair region_point(const ParallelGaussianChannel& channel, const PowerSplit& q,
                      std::span<const double> allocation) {
  const auto caps = effective_caps(channel, allocation);
  const auto check = validate_power_split(channel.with_power_caps(caps), q);
  if (!check) throw ValidationError(check.message);
  const auto sums = receiver_sums(channel, caps, q.q);
  return {*std::min_element(sums.f.begin(), sums.f.end()),
          *std::min_element(sums.g.begin(), sums.g.end())};
}

double r1_corner(const ParallelGaussianChannel& channel, std::span<const double> allocation) {
  const auto caps = effective_caps(channel, allocation);
  return region_point(channel, PowerSplit{caps}, allocation).r1;
}

double r2_corner(const ParallelGaussianChannel& channel, std::span<const double> allocation) {
  const auto caps = effective_caps(channel, allocation);
  return region_point(channel, PowerSplit{std::vector<double>(caps.size(), 0.0)}, allocation).r2;
}

// ---------------------------------------------------------------------------

namespace {

// The program restricted to the coordinates that are still free.
struct Program {
  const ParallelGaussianChannel* ch = nullptr;
  std::vector<double> caps;
  std::size_t m = 0;
  std::size_t kc = 0;
  double r1 = 0.0;                       // effective target
  std::vector<std::vector<char>> in_y;   // [k][i]
  std::vector<std::vector<char>> in_z;   // [k][i]
  std::vector<double> q_fixed;           // full vector; free entries ignored
  std::vector<std::size_t> free_idx;
  std::vector<std::size_t> constrained;  // receivers with an explicit F_k >= r1 row

  double s(std::size_t k, std::size_t i) const { return ch->sigma_sq(k, i); }
  double d(std::size_t i) const { return ch->delta_sq(i); }

  double f_term(std::size_t k, std::size_t i, double q) const {
    return in_y[k][i] ? 0.5 * std::log1p(q / s(k, i)) - 0.5 * std::log1p(q / d(i)) : 0.0;
  }
  double g_term(std::size_t k, std::size_t i, double q) const {
    if (!in_z[k][i]) return 0.0;
    const double gap = caps[i] - q;
    return 0.5 * std::log1p(gap / (q + d(i))) - 0.5 * std::log1p(gap / (q + s(k, i)));
  }

  std::vector<double> full(const Eigen::VectorXd& qf) const {
    std::vector<double> q = q_fixed;
    for (std::size_t j = 0; j < free_idx.size(); ++j) q[free_idx[j]] = qf[static_cast<Eigen::Index>(j)];
    return q;
  }

  void sums(const std::vector<double>& q, std::vector<double>& f, std::vector<double>& g) const {
    f.assign(kc, 0.0);
    g.assign(kc, 0.0);
    for (std::size_t k = 0; k < kc; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        f[k] += f_term(k, i, q[i]);
        g[k] += g_term(k, i, q[i]);
      }
  }

  bool depends_on_free_y(std::size_t k) const {
    for (std::size_t i : free_idx)
      if (in_y[k][i]) return true;
    return false;
  }

  double min_gap(const std::vector<double>& f) const {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k : constrained) gap = std::min(gap, f[k] - r1);
    return gap;
  }
};

Eigen::VectorXd free_part(const Program& pr, const std::vector<double>& q) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(pr.free_idx.size()));
  for (std::size_t j = 0; j < pr.free_idx.size(); ++j) x[static_cast<Eigen::Index>(j)] = q[pr.free_idx[j]];
  return x;
}

// Best feasible point of a uniform grid over the free coordinates.
std::vector<double> grid_warm_start(const Program& pr, std::size_t points) {
  const std::size_t nf = pr.free_idx.size();
  const std::size_t kc = pr.kc;
  std::vector<double> base_f(kc, 0.0), base_g(kc, 0.0);
  for (std::size_t k = 0; k < kc; ++k)
    for (std::size_t i = 0; i < pr.m; ++i) {
      if (std::find(pr.free_idx.begin(), pr.free_idx.end(), i) != pr.free_idx.end()) continue;
      base_f[k] += pr.f_term(k, i, pr.q_fixed[i]);
      base_g[k] += pr.g_term(k, i, pr.q_fixed[i]);
    }
  // tab[j][level][k]
  std::vector<std::vector<std::vector<double>>> tf(nf), tg(nf);
  for (std::size_t j = 0; j < nf; ++j) {
    const std::size_t i = pr.free_idx[j];
    tf[j].assign(points, std::vector<double>(kc));
    tg[j].assign(points, std::vector<double>(kc));
    for (std::size_t l = 0; l < points; ++l) {
      const double q = l + 1 == points ? pr.caps[i]
                                       : pr.caps[i] * static_cast<double>(l) / static_cast<double>(points - 1);
      for (std::size_t k = 0; k < kc; ++k) {
        tf[j][l][k] = pr.f_term(k, i, q);
        tg[j][l][k] = pr.g_term(k, i, q);
      }
    }
  }

  std::vector<std::size_t> idx(nf, 0), best_idx(nf, points - 1);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> f(kc), g(kc);
  for (;;) {
    f = base_f;
    g = base_g;
    for (std::size_t j = 0; j < nf; ++j)
      for (std::size_t k = 0; k < kc; ++k) {
        f[k] += tf[j][idx[j]][k];
        g[k] += tg[j][idx[j]][k];
      }
    if (pr.min_gap(f) >= 0.0) {
      const double val = *std::min_element(g.begin(), g.end());
      if (val > best) {
        best = val;
        best_idx = idx;
      }
    }
    std::size_t j = 0;
    while (j < nf && ++idx[j] == points) idx[j++] = 0;
    if (j == nf) break;
  }

  std::vector<double> q = pr.q_fixed;
  for (std::size_t j = 0; j < nf; ++j) {
    const std::size_t i = pr.free_idx[j];
    q[i] = best_idx[j] + 1 == points
               ? pr.caps[i]
               : pr.caps[i] * static_cast<double>(best_idx[j]) / static_cast<double>(points - 1);
  }
  return q;
}

// Projected subgradient ascent on min_k G_k - rho * sum_k [r1 - F_k]^+.
// Returns the best feasible iterate.
std::vector<double> subgradient_refine(const Program& pr, std::vector<double> q, int iterations,
                                       double tol, int& used) {
  const std::size_t nf = pr.free_idx.size();
  const double rho = 100.0;
  double pmax = 0.0;
  for (std::size_t i : pr.free_idx) pmax = std::max(pmax, pr.caps[i]);

  std::vector<double> f, g;
  std::vector<double> best_q = q;
  pr.sums(q, f, g);
  double best = pr.min_gap(f) >= 0.0 ? *std::min_element(g.begin(), g.end())
                                     : -std::numeric_limits<double>::infinity();
  used = 0;
  std::vector<double> grad(nf);
  for (int t = 0; t < iterations; ++t) {
    ++used;
    const double gmin = *std::min_element(g.begin(), g.end());
    std::fill(grad.begin(), grad.end(), 0.0);
    std::size_t n_active = 0;
    for (std::size_t k = 0; k < pr.kc; ++k) {
      if (g[k] > gmin + 1e-12) continue;
      ++n_active;
      for (std::size_t j = 0; j < nf; ++j) {
        const std::size_t i = pr.free_idx[j];
        if (pr.in_z[k][i]) grad[j] += slope(q[i], pr.s(k, i), pr.d(i));
      }
    }
    for (double& v : grad) v /= static_cast<double>(std::max<std::size_t>(1, n_active));
    for (std::size_t k : pr.constrained) {
      if (f[k] >= pr.r1) continue;
      for (std::size_t j = 0; j < nf; ++j) {
        const std::size_t i = pr.free_idx[j];
        if (pr.in_y[k][i]) grad[j] += rho * slope(q[i], pr.s(k, i), pr.d(i));
      }
    }
    double gnorm = 0.0;
    for (double v : grad) gnorm = std::max(gnorm, std::abs(v));
    if (gnorm == 0.0) break;
    const double step = 0.05 * pmax / std::sqrt(static_cast<double>(t) + 1.0);
    double change = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      const std::size_t i = pr.free_idx[j];
      const double next = std::clamp(q[i] + step * grad[j] / gnorm, 0.0, pr.caps[i]);
      change = std::max(change, std::abs(next - q[i]));
      q[i] = next;
    }
    pr.sums(q, f, g);
    if (pr.min_gap(f) >= 0.0) {
      const double val = *std::min_element(g.begin(), g.end());
      if (val > best) {
        best = val;
        best_q = q;
      }
    }
    if (change < tol) break;
  }
  return best_q;
}

// Strictly feasible start for the barrier: pull into the box interior, then
// move toward Q = P until every F_k row has slack.
Eigen::VectorXd barrier_start(const Program& pr, const std::vector<double>& q_warm) {
  std::vector<double> q = q_warm;
  for (std::size_t i : pr.free_idx) {
    const double eta = 1e-4 * pr.caps[i];
    q[i] = std::clamp(q[i], eta, pr.caps[i] - eta);
  }
  std::vector<double> f, g;
  if (!pr.constrained.empty()) {
    std::vector<double> top = pr.q_fixed;
    for (std::size_t i : pr.free_idx) top[i] = pr.caps[i];
    pr.sums(top, f, g);
    const double gap_max = pr.min_gap(f);
    pr.sums(q, f, g);
    if (pr.min_gap(f) < 1e-3 * gap_max) {
      const double level = 0.5 * gap_max;
      auto at = [&](double s) {
        std::vector<double> qs = q;
        for (std::size_t i : pr.free_idx) qs[i] = q[i] + s * (pr.caps[i] - q[i]);
        return qs;
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        pr.sums(at(mid), f, g);
        (pr.min_gap(f) >= level ? hi : lo) = mid;
      }
      q = at(hi);
    }
  }
  pr.sums(q, f, g);
  const double gmin = *std::min_element(g.begin(), g.end());
  Eigen::VectorXd x(static_cast<Eigen::Index>(pr.free_idx.size() + 1));
  x.head(static_cast<Eigen::Index>(pr.free_idx.size())) = free_part(pr, q);
  x[x.size() - 1] = gmin - 0.1 * (1.0 + std::abs(gmin));
  return x;
}

opt::NlpFunction barrier_function(const Program& pr) {
  return [&pr](const Eigen::VectorXd& x, opt::NlpEval& e) {
    const auto nf = static_cast<Eigen::Index>(pr.free_idx.size());
    const Eigen::Index n = nf + 1;
    const std::vector<double> q = pr.full(x.head(nf));
    const double t = x[nf];
    std::vector<double> f, g;
    pr.sums(q, f, g);

    const auto nc = static_cast<Eigen::Index>(pr.constrained.size() + pr.kc + 2 * pr.free_idx.size());
    e.f = t;
    e.grad = Eigen::VectorXd::Zero(n);
    e.grad[nf] = 1.0;
    e.hess = Eigen::MatrixXd::Zero(n, n);
    e.c.resize(nc);
    e.jac = Eigen::MatrixXd::Zero(nc, n);
    e.c_hess.assign(static_cast<std::size_t>(nc), Eigen::MatrixXd::Zero(n, n));

    Eigen::Index row = 0;
    for (std::size_t k : pr.constrained) {
      e.c[row] = f[k] - pr.r1;
      for (Eigen::Index j = 0; j < nf; ++j) {
        const std::size_t i = pr.free_idx[static_cast<std::size_t>(j)];
        if (!pr.in_y[k][i]) continue;
        e.jac(row, j) = slope(q[i], pr.s(k, i), pr.d(i));
        e.c_hess[static_cast<std::size_t>(row)](j, j) = curvature(q[i], pr.s(k, i), pr.d(i));
      }
      ++row;
    }
    for (std::size_t k = 0; k < pr.kc; ++k) {
      e.c[row] = g[k] - t;
      e.jac(row, nf) = -1.0;
      for (Eigen::Index j = 0; j < nf; ++j) {
        const std::size_t i = pr.free_idx[static_cast<std::size_t>(j)];
        if (!pr.in_z[k][i]) continue;
        e.jac(row, j) = slope(q[i], pr.s(k, i), pr.d(i));
        e.c_hess[static_cast<std::size_t>(row)](j, j) = curvature(q[i], pr.s(k, i), pr.d(i));
      }
      ++row;
    }
    for (Eigen::Index j = 0; j < nf; ++j) {
      const std::size_t i = pr.free_idx[static_cast<std::size_t>(j)];
      e.c[row] = q[i];
      e.jac(row, j) = 1.0;
      ++row;
      e.c[row] = pr.caps[i] - q[i];
      e.jac(row, j) = -1.0;
      ++row;
    }
  };
}

void finish_point(const ParallelGaussianChannel& channel, BoundaryPoint& point,
                  const std::vector<double>& caps, bool solver_converged, double kkt_tol) {
  for (std::size_t i = 0; i < caps.size(); ++i) point.q.q[i] = std::clamp(point.q.q[i], 0.0, caps[i]);
  point.rates = region_point(channel, point.q);
  point.certificate = recover_certificate(channel, point.q, point.r1_target, point.rates.r2);
  point.converged = solver_converged && point.certificate.residuals.max() <= kkt_tol;
}

}  // namespace

BoundaryPoint max_r2_given_r1(const ParallelGaussianChannel& channel, double r1_target,
                              const SolverOptions& options) {
  if (channel.has_total_power())
    throw ValidationError("the boundary solver needs per-sub-channel power caps");
  require_finite(r1_target, "r1 target");
  if (r1_target < -1e-12) throw ValidationError("r1 target must be nonnegative");

  const std::size_t m = channel.subchannels();
  const std::size_t kc = channel.receivers();
  const auto caps_span = channel.power_caps();
  const std::vector<double> caps(caps_span.begin(), caps_span.end());

  BoundaryPoint point;
  point.r1_target = r1_target;
  point.q.q.assign(m, 0.0);

  const auto top = receiver_sums(channel, caps, caps);
  const double corner = *std::min_element(top.f.begin(), top.f.end());
  if (r1_target > corner + 1e-9)
    throw ValidationError("r1 target " + std::to_string(r1_target) + " exceeds the R1 corner " +
                          std::to_string(corner));

  // R2 = 0 whenever some receiver sees no sub-channel in its Z set; Q = P is
  // then optimal and maximizes every F_k.
  for (std::size_t k = 0; k < kc; ++k) {
    bool has_z = false;
    for (std::size_t i = 0; i < m; ++i)
      has_z = has_z || (caps[i] > 0.0 && channel.sigma_sq(k, i) > channel.delta_sq(i));
    if (!has_z) {
      point.q.q = caps;
      finish_point(channel, point, caps, true, options.kkt_tolerance);
      return point;
    }
  }

  // Q = 0 maximizes every G_k simultaneously.
  if (r1_target <= 0.0) {
    finish_point(channel, point, caps, true, options.kkt_tolerance);
    return point;
  }

  Program pr;
  pr.ch = &channel;
  pr.caps = caps;
  pr.m = m;
  pr.kc = kc;
  pr.in_y.assign(kc, std::vector<char>(m, 0));
  pr.in_z.assign(kc, std::vector<char>(m, 0));
  for (std::size_t k = 0; k < kc; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      pr.in_y[k][i] = channel.sigma_sq(k, i) < channel.delta_sq(i);
      pr.in_z[k][i] = channel.sigma_sq(k, i) > channel.delta_sq(i);
    }
  pr.q_fixed.assign(m, 0.0);

  const double corner_tol = 1e-10 * std::max(1.0, corner);
  pr.r1 = std::min(r1_target, corner);
  std::vector<char> fixed(m, 0);
  std::vector<char> tight(kc, 0);
  for (std::size_t k = 0; k < kc; ++k) {
    if (top.f[k] > pr.r1 + corner_tol) continue;
    tight[k] = 1;
    for (std::size_t i = 0; i < m; ++i)
      if (pr.in_y[k][i]) {
        fixed[i] = 1;
        pr.q_fixed[i] = caps[i];
      }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (fixed[i]) continue;
    bool relevant = false;
    for (std::size_t k = 0; k < kc; ++k) relevant = relevant || pr.in_y[k][i] || pr.in_z[k][i];
    if (caps[i] > 0.0 && relevant) pr.free_idx.push_back(i);
  }
  for (std::size_t k = 0; k < kc; ++k)
    if (!tight[k] && pr.depends_on_free_y(k)) pr.constrained.push_back(k);

  if (pr.free_idx.empty()) {
    point.q.q = pr.q_fixed;
    finish_point(channel, point, caps, true, options.kkt_tolerance);
    return point;
  }

  std::vector<double> q0;
  if (options.warm_start) {
    if (options.warm_start->size() != m) throw ValidationError("warm start dimension mismatch");
    q0 = pr.q_fixed;
    for (std::size_t i : pr.free_idx) q0[i] = std::clamp((*options.warm_start)[i], 0.0, caps[i]);
    std::vector<double> f, g;
    pr.sums(q0, f, g);
    if (pr.min_gap(f) < 0.0) {
      std::vector<double> hi = pr.q_fixed;
      for (std::size_t i : pr.free_idx) hi[i] = caps[i];
      q0 = hi;
    }
  } else if (pr.free_idx.size() <= options.grid_max_dim && options.grid_points >= 2) {
    q0 = grid_warm_start(pr, options.grid_points);
  } else {
    q0 = pr.q_fixed;
    for (std::size_t i : pr.free_idx) q0[i] = 0.5 * caps[i];
    std::vector<double> f, g;
    pr.sums(q0, f, g);
    if (pr.min_gap(f) < 0.0)
      for (std::size_t i : pr.free_idx) q0[i] = caps[i];
  }

  int used = 0;
  q0 = subgradient_refine(pr, q0, options.subgradient_iterations, options.step_tolerance, used);
  point.iterations = used;

  const Eigen::VectorXd x0 = barrier_start(pr, q0);
  const auto fn = barrier_function(pr);
  const opt::BarrierResult res = opt::maximize(fn, x0);
  point.iterations += res.newton_steps;
  point.q.q = pr.full(res.x.head(static_cast<Eigen::Index>(pr.free_idx.size())));
  const bool solver_ok = res.polished || (res.converged && res.last_step < options.step_tolerance);
  finish_point(channel, point, caps, solver_ok, options.kkt_tolerance);
  return point;
}

std::vector<BoundaryPoint> boundary_sweep(const ParallelGaussianChannel& channel,
                                          std::size_t n_points, const SolverOptions& options) {
  if (n_points < 2) throw ValidationError("a sweep needs at least 2 points");
  const double corner = r1_corner(channel);
  std::vector<BoundaryPoint> points(n_points);
  parallel_for(n_points, [&](std::size_t j) {
    const double target = j + 1 == n_points
                              ? corner
                              : corner * static_cast<double>(j) / static_cast<double>(n_points - 1);
    try {
      points[j] = max_r2_given_r1(channel, target, options);
    } catch (const std::exception& ex) {
      points[j] = BoundaryPoint{};
      points[j].r1_target = target;
      points[j].q.q.assign(channel.subchannels(), std::numeric_limits<double>::quiet_NaN());
      points[j].rates = {std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
      points[j].error = ex.what();
    }
  });
  std::stable_sort(points.begin(), points.end(), [](const BoundaryPoint& a, const BoundaryPoint& b) {
    const double ka = std::isnan(a.rates.r1) ? a.r1_target : a.rates.r1;
    const double kb = std::isnan(b.rates.r1) ? b.r1_target : b.rates.r1;
    return ka < kb;
  });
  return points;
}

}  // namespace rbc::gaussian
