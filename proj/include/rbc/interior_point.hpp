#pragma once

// Small dense log-barrier solver for smooth problems
//   maximize f(x) subject to c_j(x) >= 0.
// Intended for a handful of variables and constraints.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace rbc::opt {

struct NlpEval {
  double f = 0.0;
  Eigen::VectorXd grad;                // df/dx
  Eigen::MatrixXd hess;                // d2f/dx2
  Eigen::VectorXd c;                   // constraint values
  Eigen::MatrixXd jac;                 // rows are dc_j/dx
  std::vector<Eigen::MatrixXd> c_hess; // one Hessian per constraint
};

using NlpFunction = std::function<void(const Eigen::VectorXd& x, NlpEval& out)>;

struct BarrierOptions {
  double mu_start = 1e-1;
  double mu_end = 1e-11;
  double mu_factor = 0.1;
  int newton_per_level = 200;
  bool polish = true;
};

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // multiplier estimates, one per constraint
  bool converged = false;
  bool polished = false;
  int newton_steps = 0;
  double last_step = 0.0;  // max-norm of the final accepted Newton step
};

/// `x0` must be strictly feasible. Throws std::invalid_argument otherwise.
BarrierResult maximize(const NlpFunction& fn, Eigen::VectorXd x0,
                       const BarrierOptions& options = {});

}  // namespace rbc::opt
