#include "rbc/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rbc {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (passive[j]) cols.push_back(j);
  Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(c) = a.col(cols[c]);
  Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(a.cols());
  for (std::size_t c = 0; c < cols.size(); ++c) s[cols[c]] = z[c];
  return s;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations,
                double tolerance) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);

  NnlsResult result;
  result.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double scale = std::max(1.0, a.norm() * std::max(1.0, b.norm()));
  const double wtol = tolerance * scale;

  Eigen::VectorXd w = a.transpose() * (b - a * result.x);
  int iter = 0;
  while (iter < max_iterations) {
    Eigen::Index best = -1;
    double best_w = wtol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) {
      result.converged = true;
      break;
    }
    passive[best] = true;

    while (iter++ < max_iterations) {
      Eigen::VectorXd s = solve_passive(a, b, passive);
      bool all_positive = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[j] && s[j] <= 0.0) all_positive = false;
      if (all_positive) {
        result.x = s;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && s[j] <= 0.0) {
          const double denom = result.x[j] - s[j];
          if (denom > 0.0) alpha = std::min(alpha, result.x[j] / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      result.x += alpha * (s - result.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && result.x[j] <= 1e-300) {
          passive[j] = false;
          result.x[j] = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * result.x);
  }
  result.iterations = iter;
  result.residual_norm = (a * result.x - b).norm();
  return result;
}

}  // namespace rbc
