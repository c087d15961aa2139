#include "rbc/dmc_region.hpp"

#include "rbc/error.hpp"
#include "rbc/information.hpp"
#include "rbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rbc::dmc {

namespace {

using Point = std::vector<double>;
using Composition = std::vector<std::size_t>;

void compositions(std::size_t parts, std::size_t total, Composition& cur, std::vector<Composition>& out) {
  if (cur.size() + 1 == parts) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t v = 0; v <= total; ++v) {
    cur.push_back(v);
    compositions(parts, total - v, cur, out);
    cur.pop_back();
  }
}

std::vector<Composition> compositions(std::size_t parts, std::size_t total) {
  std::vector<Composition> out;
  Composition cur;
  compositions(parts, total, cur, out);
  return out;
}

double binomial(double n, double k) {
  double r = 1.0;
  for (double j = 1.0; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

double plogp_sum(const Eigen::MatrixXd& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double v = p.data()[j];
    if (v > 1e-15) h -= v * std::log(v);
  }
  return h;
}

double entropy_vec(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j)
    if (p[j] > 1e-15) h -= p[j] * std::log(p[j]);
  return h;
}

// H(z | y) when x ~ px.
double cond_entropy_z_given_y(const std::vector<Eigen::MatrixXd>& law, const Eigen::VectorXd& px) {
  Eigen::MatrixXd pyz = Eigen::MatrixXd::Zero(law.front().rows(), law.front().cols());
  for (std::size_t x = 0; x < law.size(); ++x)
    if (px[static_cast<Eigen::Index>(x)] > 0.0) pyz += px[static_cast<Eigen::Index>(x)] * law[x];
  return plogp_sum(pyz) - entropy_vec(pyz.rowwise().sum());
}

// I(x; y | z) when x ~ px.
double info_x_y_given_z(const std::vector<Eigen::MatrixXd>& law, const Eigen::VectorXd& px) {
  const Eigen::Index ny = law.front().rows();
  const Eigen::Index nz = law.front().cols();
  Eigen::MatrixXd pyz = Eigen::MatrixXd::Zero(ny, nz);
  Eigen::MatrixXd pxz(static_cast<Eigen::Index>(law.size()), nz);
  double h_xyz = 0.0;
  for (std::size_t x = 0; x < law.size(); ++x) {
    const Eigen::MatrixXd j = px[static_cast<Eigen::Index>(x)] * law[x];
    pyz += j;
    pxz.row(static_cast<Eigen::Index>(x)) = j.colwise().sum();
    h_xyz += plogp_sum(j);
  }
  const double v = plogp_sum(pxz) + plogp_sum(pyz) - h_xyz - entropy_vec(pyz.colwise().sum().transpose());
  return std::max(v, 0.0);
}

// Rounding noise of entropy differences would otherwise create spurious
// staircase steps.
double snap(double v) { return v > 1e-12 ? v : 0.0; }

// Drops weakly dominated points and duplicates.
std::vector<Point> pareto(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a > b; });
  std::vector<Point> kept;
  if (pts.empty()) return kept;
  if (pts.front().size() == 2) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto& p : pts)
      if (p[1] > best) {
        best = p[1];
        kept.push_back(std::move(p));
      }
    return kept;
  }
  for (auto& p : pts) {
    bool dominated = false;
    for (const Point& q : kept) {
      bool ge = true;
      for (std::size_t d = 0; d < p.size() && ge; ++d) ge = q[d] >= p[d];
      if (ge) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(std::move(p));
  }
  return kept;
}

struct SubResult {
  std::vector<Point> points;
  std::size_t schemes = 0;
};

// Pareto set of per-sub-channel vectors. With `project` each vector is
// (min_k r1, min_k r2); otherwise (r1_1..r1_K, r2_1..r2_K).
//
// A scheme is enumerated by its support: s distinct lattice rows of p(x|u)
// in increasing order and a positive composition of the lattice into s
// weights. Relabelings of u and zero-mass or repeated rows give no new rate
// vectors, so this covers every lattice scheme exactly once.
SubResult subchannel_points(const DegradedDMC& ch, std::size_t i, std::size_t g, bool project) {
  const std::size_t nx = ch.input_size(i);
  const std::size_t kc = ch.receivers();
  const std::size_t na = auxiliary_bound(nx, kc);

  std::vector<std::vector<Eigen::MatrixXd>> laws(kc);
  for (std::size_t k = 0; k < kc; ++k) laws[k] = ch.pair_law(i, k);
  // Flattened p(y, z | x) per receiver for the inner loop.
  std::vector<std::size_t> ny(kc), nz(kc);
  std::vector<std::vector<double>> flat(kc);
  for (std::size_t k = 0; k < kc; ++k) {
    ny[k] = static_cast<std::size_t>(laws[k].front().rows());
    nz[k] = static_cast<std::size_t>(laws[k].front().cols());
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny[k]; ++y)
        for (std::size_t z = 0; z < nz[k]; ++z)
          flat[k].push_back(laws[k][x](static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(z)));
  }

  const auto row_comps = compositions(nx, g);
  const std::size_t nr = row_comps.size();
  std::vector<Eigen::VectorXd> rows;
  for (const auto& c : row_comps) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(nx));
    for (std::size_t x = 0; x < nx; ++x) r[static_cast<Eigen::Index>(x)] = static_cast<double>(c[x]) / static_cast<double>(g);
    rows.push_back(std::move(r));
  }
  // Per row: I(x;y_k|z) and H(z|y_k) with x drawn from the row.
  std::vector<std::vector<double>> a(nr, std::vector<double>(kc));
  std::vector<std::vector<double>> b(nr, std::vector<double>(kc));
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t k = 0; k < kc; ++k) {
      a[r][k] = info_x_y_given_z(laws[k], rows[r]);
      b[r][k] = cond_entropy_z_given_y(laws[k], rows[r]);
    }

  std::vector<std::vector<Composition>> weights(na + 1);
  for (std::size_t s = 1; s <= std::min(na, g); ++s)
    for (Composition c : compositions(s, g - s)) {
      for (auto& v : c) ++v;
      weights[s].push_back(std::move(c));
    }

  // One task per (support size, first row).
  struct Task {
    std::size_t size;
    std::size_t first;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 1; s <= std::min(na, g); ++s)
    for (std::size_t f = 0; f + s <= nr; ++f) tasks.push_back({s, f});

  std::vector<std::vector<Point>> chunks(tasks.size());
  std::vector<std::size_t> counts(tasks.size(), 0);
  parallel_for(tasks.size(), [&](std::size_t t) {
    const std::size_t s = tasks[t].size;
    std::vector<Point> local;
    std::vector<double> px(nx), pyz, r1(kc), r2(kc), hy;
    Composition set(s);
    set[0] = tasks[t].first;
    for (std::size_t j = 1; j < s; ++j) set[j] = set[0] + j;
    for (;;) {
      for (const Composition& w : weights[s]) {
        std::fill(px.begin(), px.end(), 0.0);
        std::fill(r1.begin(), r1.end(), 0.0);
        std::fill(r2.begin(), r2.end(), 0.0);
        for (std::size_t u = 0; u < s; ++u) {
          const double wu = static_cast<double>(w[u]) / static_cast<double>(g);
          const Eigen::VectorXd& row = rows[set[u]];
          for (std::size_t x = 0; x < nx; ++x) px[x] += wu * row[static_cast<Eigen::Index>(x)];
          for (std::size_t k = 0; k < kc; ++k) {
            r1[k] += wu * a[set[u]][k];
            r2[k] -= wu * b[set[u]][k];
          }
        }
        for (std::size_t k = 0; k < kc; ++k) {
          const std::size_t cells = ny[k] * nz[k];
          pyz.assign(cells, 0.0);
          for (std::size_t x = 0; x < nx; ++x) {
            if (px[x] <= 0.0) continue;
            const double* l = flat[k].data() + x * cells;
            for (std::size_t c = 0; c < cells; ++c) pyz[c] += px[x] * l[c];
          }
          double h = 0.0;
          for (std::size_t y = 0; y < ny[k]; ++y) {
            double py = 0.0;
            for (std::size_t z = 0; z < nz[k]; ++z) {
              const double v = pyz[y * nz[k] + z];
              py += v;
              if (v > 1e-15) h -= v * std::log(v);
            }
            if (py > 1e-15) h += py * std::log(py);
          }
          r2[k] = snap(r2[k] + h);
          r1[k] = snap(r1[k]);
        }
        if (project) {
          local.push_back({*std::min_element(r1.begin(), r1.end()), *std::min_element(r2.begin(), r2.end())});
        } else {
          Point p(r1);
          p.insert(p.end(), r2.begin(), r2.end());
          local.push_back(std::move(p));
        }
        ++counts[t];
      }
      if (local.size() > 4096) local = pareto(std::move(local));
      // Next combination with the first row fixed.
      std::size_t pos = s;
      while (pos > 1 && set[pos - 1] == nr - (s - pos) - 1) --pos;
      if (pos == 1) break;
      ++set[pos - 1];
      for (std::size_t j = pos; j < s; ++j) set[j] = set[j - 1] + 1;
    }
    chunks[t] = pareto(std::move(local));
  });

  SubResult out;
  std::vector<Point> all;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    out.schemes += counts[t];
    for (auto& p : chunks[t]) all.push_back(std::move(p));
  }
  out.points = pareto(std::move(all));
  return out;
}

std::vector<Point> minkowski(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (static_cast<double>(a.size()) * static_cast<double>(b.size()) > 5e7)
    throw SizeGuardError("frontier Minkowski sum too large (" + std::to_string(a.size()) + " x " +
                         std::to_string(b.size()) + " points)");
  std::vector<Point> sums;
  sums.reserve(a.size() * b.size());
  for (const Point& p : a)
    for (const Point& q : b) {
      Point s(p.size());
      for (std::size_t d = 0; d < p.size(); ++d) s[d] = p[d] + q[d];
      sums.push_back(std::move(s));
    }
  return pareto(std::move(sums));
}

std::vector<RatePair> staircase(const std::vector<Point>& pts, std::size_t kc, bool projected) {
  std::vector<Point> pairs;
  for (const Point& p : pts) {
    if (projected) {
      pairs.push_back(p);
      continue;
    }
    pairs.push_back({*std::min_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(kc)),
                     *std::min_element(p.begin() + static_cast<std::ptrdiff_t>(kc), p.end())});
  }
  pairs = pareto(std::move(pairs));
  std::vector<RatePair> out;
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) out.push_back({(*it)[0], (*it)[1]});
  if (out.empty()) return {{0.0, 0.0}};
  if (out.front().r1 > 0.0) out.insert(out.begin(), RatePair{0.0, out.front().r2});
  if (out.back().r2 > 0.0) out.push_back({out.back().r1, 0.0});
  return out;
}

}  // namespace

void check_size_guard(const DegradedDMC& channel) {
  for (std::size_t i = 0; i < channel.subchannels(); ++i) {
    std::size_t states = channel.input_size(i) * static_cast<std::size_t>(channel.group2_matrix(i).cols());
    for (std::size_t k = 0; k < channel.receivers(); ++k)
      states *= static_cast<std::size_t>(channel.receiver_matrix(i, k).cols());
    if (states > kMaxJointStates)
      throw SizeGuardError("sub-channel " + std::to_string(i) + " has " + std::to_string(states) +
                           " joint states, limit is " + std::to_string(kMaxJointStates));
  }
}

double scheme_count(std::size_t input_size, std::size_t aux_size, std::size_t grid_steps) {
  const double g = static_cast<double>(grid_steps);
  const double rows = binomial(g + static_cast<double>(input_size) - 1.0, static_cast<double>(input_size) - 1.0);
  double total = 0.0;
  for (std::size_t s = 1; s <= std::min(aux_size, grid_steps); ++s) {
    const double sd = static_cast<double>(s);
    total += binomial(rows, sd) * binomial(g - 1.0, sd - 1.0);
  }
  return total;
}

Frontier dmc_frontier_at(const DegradedDMC& channel, std::size_t grid_steps) {
  if (grid_steps < 1) throw ValidationError("grid steps must be at least 1");
  check_size_guard(channel);
  const std::size_t kc = channel.receivers();
  const bool project = channel.subchannels() == 1;
  Frontier f;
  f.grid_steps = grid_steps;
  f.movement = std::numeric_limits<double>::infinity();
  std::vector<Point> acc;
  for (std::size_t i = 0; i < channel.subchannels(); ++i) {
    SubResult sub = subchannel_points(channel, i, grid_steps, project);
    f.schemes += sub.schemes;
    acc = i == 0 ? std::move(sub.points) : minkowski(acc, sub.points);
  }
  f.points = staircase(acc, kc, project);
  return f;
}

Frontier dmc_region_bruteforce(const DegradedDMC& channel, const BruteForceOptions& options) {
  if (options.grid_steps < 1) throw ValidationError("grid steps must be at least 1");
  check_size_guard(channel);
  auto affordable = [&](std::size_t g) {
    for (std::size_t i = 0; i < channel.subchannels(); ++i) {
      const std::size_t nx = channel.input_size(i);
      if (scheme_count(nx, auxiliary_bound(nx, channel.receivers()), g) > options.scheme_budget) return false;
    }
    return true;
  };
  if (!affordable(options.grid_steps))
    throw SizeGuardError("grid of " + std::to_string(options.grid_steps) +
                         " steps exceeds the scheme budget");

  Frontier cur = dmc_frontier_at(channel, options.grid_steps);
  for (std::size_t g = options.grid_steps * 2; g <= options.max_grid_steps && affordable(g); g *= 2) {
    Frontier next = dmc_frontier_at(channel, g);
    next.movement = frontier_distance(cur.points, next.points);
    cur = std::move(next);
    if (cur.movement < options.tolerance) {
      cur.converged = true;
      break;
    }
  }
  return cur;
}

double staircase_r2(const std::vector<RatePair>& frontier, double r1) {
  double best = 0.0;
  for (const RatePair& p : frontier)
    if (p.r1 >= r1) best = std::max(best, p.r2);
  return best;
}

double frontier_distance(const std::vector<RatePair>& a, const std::vector<RatePair>& b) {
  auto extent = [](const std::vector<RatePair>& f) {
    double m = 0.0;
    for (const RatePair& p : f) m = std::max(m, p.r1);
    return m;
  };
  double d = std::abs(extent(a) - extent(b));
  for (const auto* f : {&a, &b})
    for (const RatePair& p : *f) d = std::max(d, std::abs(staircase_r2(a, p.r1) - staircase_r2(b, p.r1)));
  d = std::max(d, std::abs(staircase_r2(a, 0.0) - staircase_r2(b, 0.0)));
  return d;
}

}  // namespace rbc::dmc
