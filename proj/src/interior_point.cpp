#include "rbc/interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbc::opt {

namespace {

double barrier_value(const NlpEval& e, double mu) {
  double v = -e.f;
  for (Eigen::Index j = 0; j < e.c.size(); ++j) {
    if (!(e.c[j] > 0.0)) return std::numeric_limits<double>::infinity();
    v -= mu * std::log(e.c[j]);
  }
  return v;
}

bool strictly_feasible(const NlpEval& e) {
  for (Eigen::Index j = 0; j < e.c.size(); ++j)
    if (!(e.c[j] > 0.0) || !std::isfinite(e.c[j])) return false;
  return std::isfinite(e.f);
}

// Solve (h + tau I) d = -g with the smallest tau that makes h + tau I
// positive definite.
Eigen::VectorXd regularized_newton(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  const Eigen::Index n = h.rows();
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  double tau = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(h + tau * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(-g);
      if (d.allFinite()) return d;
    }
    tau = tau == 0.0 ? 1e-12 * scale : tau * 10.0;
  }
  return -g / scale;
}

struct Polish {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  bool ok = false;
};

Polish polish_active_set(const NlpFunction& fn, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& lambda0, const Eigen::VectorXd& c0, double ratio) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < c0.size(); ++j)
    if (lambda0[j] >= ratio * c0[j]) active.push_back(j);
  const auto na = static_cast<Eigen::Index>(active.size());

  Eigen::VectorXd x = x0;
  Eigen::VectorXd lam(na);
  for (Eigen::Index a = 0; a < na; ++a) lam[a] = lambda0[active[a]];

  NlpEval e;
  auto residual = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& ll, NlpEval& ev,
                      Eigen::VectorXd& r) {
    fn(xx, ev);
    r.resize(n + na);
    r.head(n) = ev.grad;
    for (Eigen::Index a = 0; a < na; ++a) {
      r.head(n) += ll[a] * ev.jac.row(active[a]).transpose();
      r[n + a] = ev.c[active[a]];
    }
  };

  Eigen::VectorXd r;
  residual(x, lam, e, r);
  const double r0 = r.cwiseAbs().maxCoeff();
  double rnorm = r0;
  for (int it = 0; it < 30 && rnorm > 1e-15; ++it) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = e.hess;
    for (Eigen::Index a = 0; a < na; ++a) {
      kkt.topLeftCorner(n, n) += lam[a] * e.c_hess[active[a]];
      kkt.block(0, n + a, n, 1) = e.jac.row(active[a]).transpose();
      kkt.block(n + a, 0, 1, n) = e.jac.row(active[a]);
    }
    Eigen::VectorXd step = kkt.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) break;
    Eigen::VectorXd xn = x + step.head(n);
    Eigen::VectorXd ln = lam + step.tail(na);
    NlpEval en;
    Eigen::VectorXd rn;
    residual(xn, ln, en, rn);
    const double nn = rn.cwiseAbs().maxCoeff();
    if (!(nn < rnorm)) break;
    x = xn;
    lam = ln;
    e = en;
    r = rn;
    rnorm = nn;
  }

  Polish out;
  if (!(rnorm <= std::max(1e-12, 1e-3 * r0))) return out;
  for (Eigen::Index j = 0; j < e.c.size(); ++j)
    if (e.c[j] < -1e-12) return out;
  for (Eigen::Index a = 0; a < na; ++a)
    if (lam[a] < -1e-12) return out;
  out.x = x;
  out.lambda = Eigen::VectorXd::Zero(c0.size());
  for (Eigen::Index a = 0; a < na; ++a) out.lambda[active[a]] = std::max(0.0, lam[a]);
  out.ok = true;
  return out;
}

}  // namespace

BarrierResult maximize(const NlpFunction& fn, Eigen::VectorXd x0, const BarrierOptions& options) {
  NlpEval e;
  fn(x0, e);
  if (!strictly_feasible(e)) throw std::invalid_argument("barrier start is not strictly feasible");

  BarrierResult result;
  Eigen::VectorXd x = std::move(x0);
  bool all_levels_converged = true;
  double mu = options.mu_start;
  for (;;) {
    bool level_converged = false;
    for (int it = 0; it < options.newton_per_level; ++it) {
      const Eigen::Index m = e.c.size();
      Eigen::VectorXd g = -e.grad;
      Eigen::MatrixXd h = -e.hess;
      for (Eigen::Index j = 0; j < m; ++j) {
        const double cj = e.c[j];
        const Eigen::VectorXd dj = e.jac.row(j).transpose();
        g -= (mu / cj) * dj;
        h += (mu / (cj * cj)) * dj * dj.transpose() - (mu / cj) * e.c_hess[j];
      }
      const Eigen::VectorXd d = regularized_newton(h, g);
      const double decrement = -g.dot(d);
      const double step_norm = d.cwiseAbs().maxCoeff();
      if (decrement <= 1e-20 || step_norm <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) {
        level_converged = true;
        result.last_step = step_norm;
        break;
      }

      const double phi = barrier_value(e, mu);
      double s = 1.0;
      bool accepted = false;
      NlpEval trial;
      for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
        Eigen::VectorXd xt = x + s * d;
        fn(xt, trial);
        if (!strictly_feasible(trial)) continue;
        const double phit = barrier_value(trial, mu);
        if (phit <= phi - 1e-4 * s * decrement + 1e-14 * (1.0 + std::abs(phi))) {
          x = std::move(xt);
          e = trial;
          accepted = true;
          break;
        }
      }
      ++result.newton_steps;
      if (!accepted) {
        level_converged = decrement <= 1e-10;
        break;
      }
      result.last_step = s * step_norm;
    }
    all_levels_converged = all_levels_converged && level_converged;
    if (mu <= options.mu_end) break;
    mu = std::max(options.mu_end, mu * options.mu_factor);
  }

  Eigen::VectorXd lambda(e.c.size());
  for (Eigen::Index j = 0; j < e.c.size(); ++j) lambda[j] = mu / e.c[j];

  result.x = x;
  result.lambda = lambda;
  result.converged = all_levels_converged;
  if (options.polish) {
    // Constraints with small multipliers sit at distance mu/lambda from
    // their bound; widen the active set until a consistent KKT point is found.
    for (double ratio : {1.0, 1e-2, 1e-4, 1e-6}) {
      Polish p = polish_active_set(fn, x, lambda, e.c, ratio);
      if (!p.ok) continue;
      result.x = std::move(p.x);
      result.lambda = std::move(p.lambda);
      result.polished = true;
      break;
    }
  }
  return result;
}

}  // namespace rbc::opt
