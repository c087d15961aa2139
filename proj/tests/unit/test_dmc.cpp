#include "rbc/dmc_region.hpp"
#include "rbc/error.hpp"
#include "rbc/gaussian_region.hpp"
#include "rbc/information.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <array>
#include <cmath>

using namespace rbc;
using namespace rbc::dmc;

namespace {

Eigen::MatrixXd bsc(double p) {
  Eigen::MatrixXd m(2, 2);
  m << 1 - p, p, p, 1 - p;
  return m;
}

double h2(double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log(p) - (1 - p) * std::log(1 - p); }
double conv(double a, double b) { return a * (1 - b) + b * (1 - a); }

// Independent tabulation of p(u, x, y, z) for binary variables with z = y
// through `down` (y upstream) or y = z through `down` (z upstream).
struct Joint {
  std::array<double, 16> p{};  // index u*8 + x*4 + y*2 + z

  double entropy(int mask) const {
    std::array<double, 16> m{};
    for (int s = 0; s < 16; ++s) {
      int key = 0;
      for (int b = 0; b < 4; ++b)
        if (mask & (1 << b)) key |= s & (8 >> b);
      m[static_cast<std::size_t>(key)] += p[static_cast<std::size_t>(s)];
    }
    double h = 0.0;
    for (double v : m)
      if (v > 0) h -= v * std::log(v);
    return h;
  }
  // I(A;B|C) with masks over bits U=1, X=2, Y=4, Z=8.
  double cmi(int a, int b, int c) const { return entropy(a | c) + entropy(b | c) - entropy(a | b | c) - entropy(c); }
};

Joint tabulate(double a, double up, double down, bool y_upstream) {
  Joint j;
  for (int u = 0; u < 2; ++u)
    for (int x = 0; x < 2; ++x)
      for (int o1 = 0; o1 < 2; ++o1)
        for (int o2 = 0; o2 < 2; ++o2) {
          const double pr = 0.5 * (x == u ? 1 - a : a) * (o1 == x ? 1 - up : up) * (o2 == o1 ? 1 - down : down);
          const int y = y_upstream ? o1 : o2, z = y_upstream ? o2 : o1;
          j.p[static_cast<std::size_t>(u * 8 + x * 4 + y * 2 + z)] += pr;
        }
  return j;
}

constexpr int U = 1, X = 2, Y = 4, Z = 8;

AuxiliaryScheme single(std::vector<double> pu, Eigen::MatrixXd pxu) { return {{SubScheme{std::move(pu), std::move(pxu)}}}; }

}  // namespace

TEST_SUITE("dmc") {

TEST_CASE("rate pair matches an independent joint tabulation") {
  for (bool y_up : {true, false}) {
    for (double a : {0.0, 0.07, 0.3, 0.5}) {
      const double up = 0.1, down = 0.125;
      const Eigen::MatrixXd w_up = bsc(up), w_down = w_up * bsc(down);
      DegradedDMC ch({y_up ? DmcSubChannel{w_down, {w_up}, SubChannelOrder{{0}, 1}}
                           : DmcSubChannel{w_up, {w_down}, SubChannelOrder{{0}, 0}}});
      const auto r = dmc_rate_pair(ch, single({0.5, 0.5}, bsc(a)));
      const Joint j = tabulate(a, up, down, y_up);
      CHECK(r.r1 == doctest::Approx(j.cmi(X, Y, U | Z)).epsilon(1e-12));
      CHECK(r.r2 == doctest::Approx(j.cmi(U, Z, Y)).epsilon(1e-12));
      if (y_up) CHECK(r.r1 == doctest::Approx(h2(conv(a, 0.1)) - h2(0.1) - h2(conv(a, 0.2)) + h2(0.2)).epsilon(1e-12));
      else CHECK(r.r2 == doctest::Approx(h2(conv(a, 0.2)) - h2(conv(a, 0.1))).epsilon(1e-12));
    }
  }
}

TEST_CASE("deterministic and copy auxiliaries") {
  const Eigen::MatrixXd y = bsc(0.1);
  const Eigen::MatrixXd z = y * bsc(0.2);
  DegradedDMC ch({DmcSubChannel{z, {y}, SubChannelOrder{{0}, 1}}});
  Eigen::MatrixXd px(1, 2);
  px << 0.3, 0.7;
  const auto det = dmc_rate_pair(ch, single({1.0}, px));
  CHECK(det.r2 == 0.0);
  const double iyz = h2(conv(0.7, 0.1)) - h2(0.1) - (h2(conv(0.7, conv(0.1, 0.2))) - h2(conv(0.1, 0.2)));
  CHECK(det.r1 == doctest::Approx(iyz).epsilon(1e-12));
  const auto copy = dmc_rate_pair(ch, single({0.3, 0.7}, Eigen::MatrixXd::Identity(2, 2)));
  CHECK(copy.r1 == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("chain rule on degraded chains") {
  const Eigen::MatrixXd y = bsc(0.05);
  const Eigen::MatrixXd z = y * bsc(0.15);
  DegradedDMC ch({DmcSubChannel{z, {y}, SubChannelOrder{{0}, 1}}});
  Eigen::MatrixXd pxu(3, 2);
  pxu << 0.9, 0.1, 0.4, 0.6, 0.2, 0.8;
  const auto t = term_information(ch.pair_law(0, 0), SubScheme{{0.2, 0.5, 0.3}, pxu});
  CHECK(std::abs(t.x_y_given_u - t.x_z_given_u - t.x_y_given_uz) < 1e-9);
  for (double v : {t.x_y_given_uz, t.u_z_given_y, t.x_y_given_u, t.x_z_given_u, t.u_z, t.u_y}) CHECK(v >= 0.0);
}

TEST_CASE("schemes are validated") {
  DegradedDMC ch({DmcSubChannel{bsc(0.2), {bsc(0.1)}, SubChannelOrder{{0}, 1}}});
  CHECK_THROWS_AS(dmc_rate_pair(ch, single({0.5, 0.6}, bsc(0.1))), ValidationError);
  CHECK_THROWS_AS(dmc_rate_pair(ch, single({1.0}, Eigen::MatrixXd::Constant(1, 3, 1.0 / 3))), ValidationError);
  CHECK(auxiliary_bound(2, 1) == 3);
  Eigen::MatrixXd big = Eigen::MatrixXd::Constant(4, 2, 0.5);
  CHECK_THROWS_AS(dmc_rate_pair(ch, single({0.25, 0.25, 0.25, 0.25}, big)), ValidationError);
}

TEST_CASE("binary wiretap corner matches a bias scan") {
  Eigen::MatrixXd wz(2, 2);
  wz << 1.0, 0.0, 0.3, 0.7;
  const Eigen::MatrixXd wy = wz * bsc(0.1);
  DegradedDMC ch({DmcSubChannel{wz, {wy}, SubChannelOrder{{0}, 0}}});
  double oracle = 0.0;
  for (int j = 0; j <= 10000; ++j) {
    const double p = j * 1e-4;
    const double izx = h2(p * 0.7) - p * h2(0.7);
    const double py1 = (1 - p) * wy(0, 1) + p * wy(1, 1);
    oracle = std::max(oracle, izx - (h2(py1) - (1 - p) * h2(wy(0, 1)) - p * h2(wy(1, 1))));
  }
  const auto f = dmc_region_bruteforce(ch);
  CHECK(f.converged);
  CHECK(std::abs(f.points.front().r2 - oracle) <= 2e-3);
  CHECK(f.points.front().r2 <= oracle + 1e-12);
}

TEST_CASE("frontier is a staircase with both axis points") {
  const Eigen::MatrixXd y0 = bsc(0.05);
  const Eigen::MatrixXd z = y0 * bsc(0.1);
  DegradedDMC ch({DmcSubChannel{z, {y0}, SubChannelOrder{{0}, 1}},
                  DmcSubChannel{bsc(0.05), {bsc(0.05) * bsc(0.2)}, SubChannelOrder{{0}, 0}}});
  for (std::size_t g : {1, 2, 4}) {
    const auto f = dmc_frontier_at(ch, g);
    REQUIRE(!f.points.empty());
    CHECK(f.points.front().r1 == 0.0);
    CHECK(f.points.back().r2 == 0.0);
    for (std::size_t j = 1; j < f.points.size(); ++j) {
      CHECK(f.points[j].r1 >= f.points[j - 1].r1);
      CHECK(f.points[j].r2 <= f.points[j - 1].r2);
    }
  }
}

TEST_CASE("parallel frontier dominates the summed single corners") {
  const auto sub1 = DmcSubChannel{bsc(0.05) * bsc(0.1), {bsc(0.05)}, SubChannelOrder{{0}, 1}};
  const auto sub2 = DmcSubChannel{bsc(0.05), {bsc(0.05) * bsc(0.2)}, SubChannelOrder{{0}, 0}};
  const auto f1 = dmc_frontier_at(DegradedDMC({sub1}), 4);
  const auto f2 = dmc_frontier_at(DegradedDMC({sub2}), 4);
  const auto f = dmc_frontier_at(DegradedDMC({sub1, sub2}), 4);
  CHECK(f.points.back().r1 >= f1.points.back().r1 + f2.points.back().r1 - 1e-12);
  CHECK(f.points.front().r2 >= f1.points.front().r2 + f2.points.front().r2 - 1e-12);
}

TEST_CASE("scheme count and determinism") {
  DegradedDMC ch({DmcSubChannel{bsc(0.2), {bsc(0.1)}, SubChannelOrder{{0}, 1}}});
  const auto a = dmc_frontier_at(ch, 6);
  const auto b = dmc_frontier_at(ch, 6);
  CHECK(static_cast<double>(a.schemes) == scheme_count(2, 3, 6));
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t j = 0; j < a.points.size(); ++j) {
    CHECK(a.points[j].r1 == b.points[j].r1);
    CHECK(a.points[j].r2 == b.points[j].r2);
  }
}

TEST_CASE("size guard") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  auto build = [&] {
    DegradedDMC ch({DmcSubChannel{id, {id, id}, SubChannelOrder{{0, 1}, 2}}});
    check_size_guard(ch);
  };
  CHECK_THROWS_AS(build(), SizeGuardError);
}

TEST_CASE("staircase helpers") {
  const std::vector<RatePair> a{{0.0, 1.0}, {0.5, 1.0}, {0.5, 0.4}, {1.0, 0.4}, {1.0, 0.0}};
  CHECK(staircase_r2(a, 0.2) == 1.0);
  CHECK(staircase_r2(a, 0.7) == 0.4);
  CHECK(staircase_r2(a, 1.5) == 0.0);
  CHECK(frontier_distance(a, a) == 0.0);
  const std::vector<RatePair> b{{0.0, 1.0}, {0.5, 1.0}, {0.5, 0.3}, {1.0, 0.3}, {1.0, 0.0}};
  CHECK(frontier_distance(a, b) == doctest::Approx(0.1));
}

TEST_CASE("discretized Gaussian frontier is an inner bound") {
  // Four peak-limited levels through quantized Gaussian noise; group 2 is upstream.
  const double p = 4.0, d = 0.5, s = 2.0, amp = std::sqrt(p), t = 2.0 * amp / 3.0;
  const std::vector<double> levels{-amp, -amp / 3, amp / 3, amp};
  auto quantized = [&](double var) {
    boost::math::normal n(0.0, std::sqrt(var));
    const double edges[5] = {-INFINITY, -t, 0.0, t, INFINITY};
    Eigen::MatrixXd m(4, 4);
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) {
        auto cdf = [&](double e) { return std::isinf(e) ? (e > 0 ? 1.0 : 0.0) : boost::math::cdf(n, e - levels[a]); };
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = cdf(edges[b + 1]) - cdf(edges[b]);
      }
    return m;
  };
  const Eigen::MatrixXd wz = quantized(d);
  const Eigen::MatrixXd wy = wz * quantized(s - d);
  DegradedDMC ch({DmcSubChannel{wz, {wy}, SubChannelOrder{{0}, 0}}});
  ParallelGaussianChannel g({{s}}, {d}, PerSubChannelPower{{p}});
  const auto f = dmc_frontier_at(ch, 4);
  for (const auto& pt : f.points) {
    REQUIRE(pt.r1 <= gaussian::r1_corner(g) + 1e-12);
    CHECK(pt.r2 <= gaussian::max_r2_given_r1(g, pt.r1).rates.r2 + 1e-9);
  }
  CHECK(gaussian::r2_corner(g) - f.points.front().r2 < 0.15);
  CHECK(gaussian::r1_corner(g) - f.points.back().r1 < 0.15);
}

}  // TEST_SUITE
