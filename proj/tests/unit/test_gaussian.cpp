#include "rbc/error.hpp"
#include "rbc/gaussian_region.hpp"
#include "rbc/nnls.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rbc;
using namespace rbc::gaussian;

namespace {

std::vector<std::vector<double>> random_sigma(std::mt19937_64& rng, std::size_t k, std::size_t m) {
  std::uniform_real_distribution<double> var(0.25, 4.0);
  std::vector<std::vector<double>> s(k, std::vector<double>(m));
  for (auto& r : s)
    for (double& v : r) v = var(rng);
  return s;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t m, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(m);
  for (double& x : v) x = u(rng);
  return v;
}

double f_sum(const ParallelGaussianChannel& ch, std::size_t k, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < ch.subchannels(); ++i) s += rate_term_a1(q[i], ch.sigma_sq(k, i), ch.delta_sq(i));
  return s;
}

double g_sum(const ParallelGaussianChannel& ch, std::size_t k, const std::vector<double>& q) {
  double s = 0.0;
  const auto caps = ch.power_caps();
  for (std::size_t i = 0; i < ch.subchannels(); ++i)
    s += rate_term_a2(caps[i], q[i], ch.sigma_sq(k, i), ch.delta_sq(i));
  return s;
}

}  // namespace

TEST_SUITE("gaussian") {

TEST_CASE("rate terms match high-precision values") {
  CHECK(rate_term_a1(3.0, 1.0, 4.0) == doctest::Approx(0.41333928659223396628).epsilon(1e-15));
  CHECK(rate_term_a2(10.0, 2.0, 4.0, 1.0) == doctest::Approx(0.22599256187152861948).epsilon(1e-15));
}

TEST_CASE("rate terms vanish at their trivial points") {
  CHECK(rate_term_a1(0.0, 1.3, 0.7) == 0.0);
  CHECK(rate_term_a1(2.5, 1.1, 1.1) == 0.0);
  CHECK(rate_term_a2(4.0, 4.0, 0.5, 2.0) == 0.0);
  CHECK(rate_term_a2(4.0, 1.0, 1.7, 1.7) == 0.0);
  // Receiver weaker than group 2: clipped to zero, never negative.
  CHECK(rate_term_a1(2.0, 3.0, 1.0) == 0.0);
  CHECK(rate_term_a2(5.0, 0.0, 0.5, 2.0) == 0.0);
  CHECK_THROWS_AS(rate_term_a2(1.0, 2.0, 1.0, 2.0), ValidationError);
  CHECK_THROWS_AS(rate_term_a1(std::nan(""), 1.0, 2.0), ValidationError);
}

TEST_CASE("rate terms are scale invariant") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.1, 5.0), c(0.01, 100.0);
  for (int t = 0; t < 500; ++t) {
    const double p = u(rng), s = u(rng), d = u(rng), q = p * u(rng) / 5.0, k = c(rng);
    CHECK(std::abs(rate_term_a1(k * q, k * s, k * d) - rate_term_a1(q, s, d)) < 1e-12);
    CHECK(std::abs(rate_term_a2(k * p, k * q, k * s, k * d) - rate_term_a2(p, q, s, d)) < 1e-12);
  }
}

TEST_CASE("region point is monotone in each Q") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 100; ++t) {
    const auto caps = random_vec(rng, 3, 0.5, 8.0);
    ParallelGaussianChannel ch(random_sigma(rng, 2, 3), random_vec(rng, 3, 0.25, 4.0), PerSubChannelPower{caps});
    std::vector<double> q(3);
    for (std::size_t i = 0; i < 3; ++i) q[i] = caps[i] * 0.3;
    const auto base = region_point(ch, PowerSplit{q});
    for (std::size_t i = 0; i < 3; ++i) {
      auto up = q;
      up[i] = caps[i] * 0.8;
      const auto r = region_point(ch, PowerSplit{up});
      CHECK(r.r1 >= base.r1 - 1e-15);
      CHECK(r.r2 <= base.r2 + 1e-15);
    }
  }
}

TEST_CASE("region point is the min of per-receiver sums") {
  std::mt19937_64 rng(23);
  const auto caps = random_vec(rng, 2, 0.5, 8.0);
  ParallelGaussianChannel ch(random_sigma(rng, 2, 2), random_vec(rng, 2, 0.25, 4.0), PerSubChannelPower{caps});
  const std::vector<double> q{caps[0] * 0.4, caps[1] * 0.7};
  const auto r = region_point(ch, PowerSplit{q});
  CHECK(r.r1 == doctest::Approx(std::min(f_sum(ch, 0, q), f_sum(ch, 1, q))).epsilon(1e-14));
  CHECK(r.r2 == doctest::Approx(std::min(g_sum(ch, 0, q), g_sum(ch, 1, q))).epsilon(1e-14));
  CHECK_THROWS_AS(region_point(ch, PowerSplit{{1.0}}), ValidationError);
}

TEST_CASE("solver endpoints are the corners") {
  ParallelGaussianChannel ch({{1.0, 4.0}, {2.0, 0.5}}, {1.5, 2.0}, PerSubChannelPower{{4.0, 6.0}});
  const auto lo = max_r2_given_r1(ch, 0.0);
  CHECK(lo.rates.r2 == doctest::Approx(r2_corner(ch)).epsilon(1e-9));
  const double c = r1_corner(ch);
  const auto hi = max_r2_given_r1(ch, c);
  CHECK(hi.rates.r1 >= c - 1e-9);
  CHECK(hi.rates.r2 == doctest::Approx(0.0));
  CHECK_THROWS_AS(max_r2_given_r1(ch, c + 1e-6), ValidationError);
  CHECK_THROWS_AS(max_r2_given_r1(ch, -0.1), ValidationError);
}

TEST_CASE("half-corner point matches a dense grid search") {
  ParallelGaussianChannel ch({{1.0, 4.0}, {2.0, 0.5}}, {1.5, 2.0}, PerSubChannelPower{{4.0, 6.0}});
  const double target = 0.5 * r1_corner(ch);
  const auto sol = max_r2_given_r1(ch, target);
  double best = 0.0;
  for (int a = 0; a <= 4000; ++a)
    for (int b = 0; b <= 6000; ++b) {
      const std::vector<double> q{a * 1e-3, b * 1e-3};
      if (std::min(f_sum(ch, 0, q), f_sum(ch, 1, q)) < target) continue;
      best = std::max(best, std::min(g_sum(ch, 0, q), g_sum(ch, 1, q)));
    }
  CHECK(std::abs(sol.rates.r2 - best) < 1e-3);
  CHECK(sol.rates.r2 >= best - 1e-9);
}

TEST_CASE("sweeps are certified, sorted and nonincreasing") {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 10; ++t) {
    const auto caps = random_vec(rng, 3, 0.5, 8.0);
    ParallelGaussianChannel ch(random_sigma(rng, 3, 3), random_vec(rng, 3, 0.25, 4.0), PerSubChannelPower{caps});
    const auto sweep = boundary_sweep(ch, 9);
    REQUIRE(sweep.size() == 9);
    for (std::size_t j = 0; j < sweep.size(); ++j) {
      CHECK(sweep[j].error.empty());
      CHECK(sweep[j].certificate.residuals.max() <= 1e-6);
      double beta = 0.0;
      for (double b : sweep[j].certificate.beta) beta += b;
      CHECK(std::abs(beta - 1.0) <= 1e-9);
      if (j > 0) {
        CHECK(sweep[j].rates.r1 >= sweep[j - 1].rates.r1 - 1e-12);
        CHECK(sweep[j].rates.r2 <= sweep[j - 1].rates.r2 + 1e-9);
      }
    }
  }
}

TEST_CASE("two-point sweep gives the corners") {
  ParallelGaussianChannel ch({{1.0, 4.0}}, {2.0, 1.0}, PerSubChannelPower{{3.0, 2.0}});
  const auto s = boundary_sweep(ch, 2);
  REQUIRE(s.size() == 2);
  CHECK(s[0].rates.r1 == 0.0);
  CHECK(s[0].rates.r2 == doctest::Approx(r2_corner(ch)));
  CHECK(s[1].rates.r1 == doctest::Approx(r1_corner(ch)));
  // The sub-channel where group 2 is stronger keeps carrying message 2.
  CHECK(s[1].rates.r2 == doctest::Approx(0.5 * std::log(2.0)));
  CHECK_THROWS_AS(boundary_sweep(ch, 1), ValidationError);
}

TEST_CASE("single sub-channel sweep matches a fine 1-D grid") {
  // Mixed receivers on one sub-channel: K = 2, one stronger and one weaker than group 2.
  ParallelGaussianChannel ch({{0.5}, {3.0}}, {1.0}, PerSubChannelPower{{5.0}});
  for (const auto& p : boundary_sweep(ch, 7)) {
    double best = 0.0;
    for (int a = 0; a <= 50000; ++a) {
      const std::vector<double> q{a * 1e-4};
      if (std::min(f_sum(ch, 0, q), f_sum(ch, 1, q)) < p.r1_target - 1e-15) continue;
      best = std::max(best, std::min(g_sum(ch, 0, q), g_sum(ch, 1, q)));
    }
    CHECK(std::abs(p.rates.r2 - best) < 1e-4);
  }
}

TEST_CASE("KKT at the Q = 0 corner") {
  ParallelGaussianChannel ch({{1.0, 4.0}, {2.0, 0.5}}, {1.5, 2.0}, PerSubChannelPower{{4.0, 6.0}});
  const PowerSplit q{{0.0, 0.0}};
  const auto r2 = region_point(ch, q).r2;
  const auto cert = recover_certificate(ch, q, 0.0, r2);
  CHECK(cert.residuals.max() <= 1e-6);
  for (double a : cert.alpha) CHECK(a == 0.0);
}

TEST_CASE("single receiver normalization forces beta = 1") {
  ParallelGaussianChannel ch({{1.0, 3.0}}, {2.0, 1.0}, PerSubChannelPower{{2.0, 2.0}});
  const auto p = max_r2_given_r1(ch, 0.3 * r1_corner(ch));
  REQUIRE(p.certificate.beta.size() == 1);
  CHECK(p.certificate.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.certificate.residuals.condition[kNormalization] <= 1e-12);
}

TEST_CASE("perturbed optimum violates stationarity") {
  ParallelGaussianChannel ch({{1.0, 4.0}, {2.0, 0.5}}, {1.5, 2.0}, PerSubChannelPower{{4.0, 6.0}});
  const double target = 0.5 * r1_corner(ch);
  const auto p = max_r2_given_r1(ch, target);
  REQUIRE(p.certificate.residuals.max() <= 1e-6);
  bool some = false;
  for (std::size_t i = 0; i < 2; ++i) {
    PowerSplit moved = p.q;
    moved.q[i] = std::min(moved.q[i] + 0.1, ch.power_caps()[i]);
    if (moved.q[i] == p.q.q[i]) continue;
    const auto r = kkt_residuals(ch, moved, p.certificate, target, region_point(ch, moved).r2);
    some = some || r.max() > 1e-3;
  }
  CHECK(some);
}

TEST_CASE("total power with one sub-channel equals the capped region") {
  ParallelGaussianChannel total({{0.5}, {3.0}}, {1.0}, TotalPower{5.0});
  ParallelGaussianChannel capped({{0.5}, {3.0}}, {1.0}, PerSubChannelPower{{5.0}});
  const auto a = total_power_region(total, 5);
  const auto b = boundary_sweep(capped, 5);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(a[j].rates.r1 == doctest::Approx(b[j].rates.r1).epsilon(1e-6));
    CHECK(a[j].rates.r2 == doctest::Approx(b[j].rates.r2).epsilon(1e-6));
  }
}

TEST_CASE("identical sub-channels get a symmetric allocation") {
  ParallelGaussianChannel ch({{0.5, 0.5}, {3.0, 3.0}}, {1.0, 1.0}, TotalPower{6.0});
  for (double frac : {0.0, 0.4, 1.0}) {
    const double target = frac * r1_corner(ch, r1_corner_allocation(ch));
    const auto p = total_power_point(ch, target);
    REQUIRE(p.error.empty());
    CHECK(std::abs(p.allocation[0] - p.allocation[1]) < 1e-3);
    const auto forced = ch.with_power_caps({3.0, 3.0});
    const auto sym = max_r2_given_r1(forced, std::min(target, r1_corner(forced)));
    CHECK(p.rates.r2 >= sym.rates.r2 - 1e-6);
  }
}

TEST_CASE("secrecy water-filling corner under a total budget") {
  ParallelGaussianChannel ch({{2.0, 3.0}}, {0.5, 1.0}, TotalPower{4.0});
  double best = 0.0;
  for (int a = 0; a <= 400000; ++a) {
    const double p1 = a * 1e-5, p2 = 4.0 - p1;
    best = std::max(best, rate_term_a2(p1, 0.0, 2.0, 0.5) + rate_term_a2(p2, 0.0, 3.0, 1.0));
  }
  const auto p = total_power_point(ch, 0.0);
  CHECK(p.rates.r2 == doctest::Approx(best).epsilon(1e-6));
}

TEST_CASE("nnls solves a small problem with an active bound") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 2, -1, 1;
  const auto r = nnls(a, b);
  CHECK(r.converged);
  CHECK(r.x[1] == 0.0);
  CHECK(r.x[0] == doctest::Approx(1.5));
}

}  // TEST_SUITE
