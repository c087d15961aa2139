#include "rbc/error.hpp"
#include "rbc/gaussian_region.hpp"
#include "rbc/interior_point.hpp"
#include "rbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rbc::gaussian {

namespace {

// Maximize min_k sum_{i in S_k} 1/2 log1p(P_i/a) - 1/2 log1p(P_i/b) over
// {P >= 0, sum P <= budget}, where (a, b) = (sigma^2, delta^2) for the R1
// corner and (delta^2, sigma^2) for the R2 corner. Each term is concave.
std::vector<double> maxmin_allocation(const ParallelGaussianChannel& channel, bool group1) {
  const std::size_t m = channel.subchannels();
  const std::size_t kc = channel.receivers();
  const double budget = channel.total_power();
  auto a_of = [&](std::size_t k, std::size_t i) {
    return group1 ? channel.sigma_sq(k, i) : channel.delta_sq(i);
  };
  auto b_of = [&](std::size_t k, std::size_t i) {
    return group1 ? channel.delta_sq(i) : channel.sigma_sq(k, i);
  };
  auto member = [&](std::size_t k, std::size_t i) { return a_of(k, i) < b_of(k, i); };

  std::vector<double> alloc(m, 0.0);
  if (budget <= 0.0) return alloc;
  std::vector<std::size_t> rel;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < kc; ++k)
      if (member(k, i)) {
        rel.push_back(i);
        break;
      }
  for (std::size_t k = 0; k < kc; ++k) {
    bool any = false;
    for (std::size_t i : rel) any = any || member(k, i);
    if (!any) rel.clear();  // some receiver gets nothing: the corner is 0
  }
  if (rel.empty()) {
    std::fill(alloc.begin(), alloc.end(), budget / static_cast<double>(m));
    return alloc;
  }

  const auto nr = static_cast<Eigen::Index>(rel.size());
  const Eigen::Index n = nr + 1;
  auto fn = [&](const Eigen::VectorXd& x, opt::NlpEval& e) {
    const auto nc = static_cast<Eigen::Index>(kc) + nr + 1;
    e.f = x[nr];
    e.grad = Eigen::VectorXd::Zero(n);
    e.grad[nr] = 1.0;
    e.hess = Eigen::MatrixXd::Zero(n, n);
    e.c.resize(nc);
    e.jac = Eigen::MatrixXd::Zero(nc, n);
    e.c_hess.assign(static_cast<std::size_t>(nc), Eigen::MatrixXd::Zero(n, n));
    for (std::size_t k = 0; k < kc; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      double v = 0.0;
      for (Eigen::Index j = 0; j < nr; ++j) {
        const std::size_t i = rel[static_cast<std::size_t>(j)];
        if (!member(k, i)) continue;
        const double p = x[j], a = a_of(k, i), b = b_of(k, i);
        v += 0.5 * std::log1p(p / a) - 0.5 * std::log1p(p / b);
        e.jac(row, j) = 0.5 * (1.0 / (p + a) - 1.0 / (p + b));
        e.c_hess[k](j, j) = 0.5 * (1.0 / ((p + b) * (p + b)) - 1.0 / ((p + a) * (p + a)));
      }
      e.c[row] = v - x[nr];
      e.jac(row, nr) = -1.0;
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < nr; ++j) {
      const Eigen::Index row = static_cast<Eigen::Index>(kc) + j;
      e.c[row] = x[j];
      e.jac(row, j) = 1.0;
      sum += x[j];
    }
    const Eigen::Index last = nc - 1;
    e.c[last] = budget - sum;
    for (Eigen::Index j = 0; j < nr; ++j) e.jac(last, j) = -1.0;
  };

  Eigen::VectorXd x0(n);
  for (Eigen::Index j = 0; j < nr; ++j) x0[j] = 0.5 * budget / static_cast<double>(nr);
  opt::NlpEval e0;
  x0[nr] = 0.0;
  fn(x0, e0);
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kc; ++k) vmin = std::min(vmin, e0.c[static_cast<Eigen::Index>(k)]);
  x0[nr] = vmin - 0.1 * (1.0 + std::abs(vmin));

  const auto res = opt::maximize(fn, x0);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < nr; ++j) {
    alloc[rel[static_cast<std::size_t>(j)]] = std::max(0.0, res.x[j]);
    sum += alloc[rel[static_cast<std::size_t>(j)]];
  }
  // Rates are nondecreasing in each P_i, so spend the whole budget.
  if (sum > 0.0)
    for (double& p : alloc) p *= budget / sum;
  return alloc;
}

// Euclidean projection onto {P >= 0, sum P = budget}.
std::vector<double> project_budget(std::vector<double> p, double budget) {
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, shift = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - budget) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) shift = candidate;
  }
  for (double& v : p) v = std::max(0.0, v - shift);
  return p;
}

struct Evaluated {
  std::vector<double> alloc;
  BoundaryPoint inner;
  bool ok = false;
};

}  // namespace

std::vector<double> r1_corner_allocation(const ParallelGaussianChannel& channel) {
  if (!channel.has_total_power()) throw ValidationError("channel is not in total-power mode");
  return maxmin_allocation(channel, true);
}

std::vector<double> r2_corner_allocation(const ParallelGaussianChannel& channel) {
  if (!channel.has_total_power()) throw ValidationError("channel is not in total-power mode");
  return maxmin_allocation(channel, false);
}

TotalPowerPoint total_power_point(const ParallelGaussianChannel& channel, double r1_target,
                                  const TotalPowerOptions& options) {
  if (!channel.has_total_power()) throw ValidationError("channel is not in total-power mode");
  if (!std::isfinite(r1_target) || r1_target < -1e-12)
    throw ValidationError("r1 target must be nonnegative and finite");
  const std::size_t m = channel.subchannels();
  const double budget = channel.total_power();

  const auto p1 = r1_corner_allocation(channel);
  const auto p2 = r2_corner_allocation(channel);
  const double corner = r1_corner(channel, p1);
  if (r1_target > corner + 1e-9)
    throw ValidationError("r1 target " + std::to_string(r1_target) +
                          " exceeds the total-power R1 corner " + std::to_string(corner));

  const double lambda = corner > 0.0 ? std::clamp(r1_target / corner, 0.0, 1.0) : 0.0;
  std::vector<double> alloc(m);
  for (std::size_t i = 0; i < m; ++i) alloc[i] = lambda * p1[i] + (1.0 - lambda) * p2[i];

  SolverOptions inner = options.inner;
  auto evaluate = [&](const std::vector<double>& p, const std::vector<double>* warm) {
    Evaluated ev;
    ev.alloc = p;
    const auto ch = channel.with_power_caps(p);
    const auto top = receiver_sums(ch, p, p);
    if (*std::min_element(top.f.begin(), top.f.end()) < r1_target - 1e-12) return ev;
    SolverOptions o = inner;
    if (warm) {
      o.warm_start = *warm;
      o.subgradient_iterations = std::min(o.subgradient_iterations, 200);
    }
    try {
      ev.inner = max_r2_given_r1(ch, std::min(r1_target, corner), o);
      ev.ok = std::isfinite(ev.inner.rates.r2);
    } catch (const ValidationError&) {
      ev.ok = false;
    }
    return ev;
  };

  Evaluated cur = evaluate(alloc, nullptr);
  if (!cur.ok) {
    // Fall back to the R1-corner allocation, which is always feasible.
    alloc = p1;
    cur = evaluate(alloc, nullptr);
  }

  double step = 0.1;
  for (int it = 0; it < options.outer_iterations && cur.ok && m > 1 && step > 1e-10; ++it) {
    // Envelope gradient of R2*(P): sum_k beta_k dG_k/dP_i + M2_i (true scale).
    const auto& cert = cur.inner.certificate;
    std::vector<double> grad(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double p = cur.alloc[i];
      const double d = channel.delta_sq(i);
      for (std::size_t k = 0; k < channel.receivers(); ++k) {
        const double s = channel.sigma_sq(k, i);
        if (s > d) grad[i] += cert.beta[k] * 0.5 * (1.0 / (p + d) - 1.0 / (p + s));
      }
      grad[i] += 0.5 * cert.m2[i];
    }
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));

    std::vector<std::vector<double>> candidates;
    if (gmax > 0.0) {
      std::vector<double> next(m);
      for (std::size_t i = 0; i < m; ++i) next[i] = cur.alloc[i] + step * budget * grad[i] / gmax;
      candidates.push_back(project_budget(next, budget));
    }
    bool improved = false;
    for (int pass = 0; pass < 2 && !improved; ++pass) {
      if (pass == 1) {
        // Pairwise transfers handle kinks where the gradient is not informative.
        candidates.clear();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            if (i == j || cur.alloc[i] <= 0.0) continue;
            std::vector<double> next = cur.alloc;
            const double amount = std::min(cur.alloc[i], step * budget);
            next[i] -= amount;
            next[j] += amount;
            candidates.push_back(std::move(next));
          }
      }
      Evaluated best;
      for (const auto& cand : candidates) {
        Evaluated ev = evaluate(cand, &cur.inner.q.q);
        if (ev.ok && ev.inner.rates.r2 > cur.inner.rates.r2 + 1e-13 &&
            (!best.ok || ev.inner.rates.r2 > best.inner.rates.r2))
          best = std::move(ev);
      }
      if (best.ok) {
        cur = std::move(best);
        improved = true;
      }
    }
    step = improved ? std::min(0.5, step * 1.5) : step * 0.5;
  }

  TotalPowerPoint point;
  point.r1_target = r1_target;
  if (!cur.ok) {
    point.error = "no feasible allocation found";
    point.allocation = alloc;
    point.q.q.assign(m, std::numeric_limits<double>::quiet_NaN());
    point.rates = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return point;
  }
  point.allocation = cur.alloc;
  point.q = cur.inner.q;
  point.rates = region_point(channel, point.q, point.allocation);
  point.certificate = recover_certificate(channel, point.q, r1_target, point.rates.r2, point.allocation);
  point.converged = cur.inner.converged && point.certificate.residuals.max() <= options.inner.kkt_tolerance;
  return point;
}

std::vector<TotalPowerPoint> total_power_region(const ParallelGaussianChannel& channel,
                                                std::size_t n_points,
                                                const TotalPowerOptions& options) {
  if (n_points < 2) throw ValidationError("a sweep needs at least 2 points");
  if (!channel.has_total_power()) throw ValidationError("channel is not in total-power mode");
  const double corner = r1_corner(channel, r1_corner_allocation(channel));
  std::vector<TotalPowerPoint> points(n_points);
  parallel_for(n_points, [&](std::size_t j) {
    const double target = j + 1 == n_points
                              ? corner
                              : corner * static_cast<double>(j) / static_cast<double>(n_points - 1);
    try {
      points[j] = total_power_point(channel, target, options);
    } catch (const std::exception& ex) {
      points[j] = TotalPowerPoint{};
      points[j].r1_target = target;
      points[j].error = ex.what();
      points[j].allocation.assign(channel.subchannels(), std::numeric_limits<double>::quiet_NaN());
      points[j].q.q.assign(channel.subchannels(), std::numeric_limits<double>::quiet_NaN());
      points[j].rates = {std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
    }
  });
  std::stable_sort(points.begin(), points.end(),
                   [](const TotalPowerPoint& a, const TotalPowerPoint& b) {
                     const double ka = std::isnan(a.rates.r1) ? a.r1_target : a.rates.r1;
                     const double kb = std::isnan(b.rates.r1) ? b.r1_target : b.rates.r1;
                     return ka < kb;
                   });
  return points;
}

}  // namespace rbc::gaussian
