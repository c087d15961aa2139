#include "rbc/error.hpp"
#include "rbc/fading.hpp"
#include "rbc/gaussian_region.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace rbc;
using namespace rbc::fading;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("fading") {

TEST_CASE("extreme splits give exact zeros") {
  const auto sc = rayleigh_scenario(2, 10.0, 5);
  const QuantGrid grid = QuantGrid::uniform(4, 8.0);
  Tabulated none = tabulate_threshold(grid, 2, 0.0, 10.0);
  Tabulated all = tabulate_threshold(grid, 2, kInf, 10.0);
  const auto r0 = fading_rates_mc(sc, none, 20000);
  const auto rp = fading_rates_mc(sc, all, 20000);
  CHECK(r0.rates.r1 == 0.0);
  CHECK(r0.rates.r2 > 0.0);
  CHECK(rp.rates.r2 == 0.0);
  CHECK(rp.rates.r1 > 0.0);
  CHECK(quantized_rates(sc, none).r1 == 0.0);
  CHECK(quantized_rates(sc, all).r2 == 0.0);
}

TEST_CASE("threshold corners") {
  const auto sc = rayleigh_scenario(1, 10.0, 9);
  const auto lo = threshold_rates(sc, 0.0, 20000);
  const auto hi = threshold_rates(sc, kInf, 20000);
  CHECK(lo.rates.r1 == 0.0);
  CHECK(hi.rates.r2 == 0.0);
  CHECK(lo.rates.r2 > 0.0);
  CHECK(hi.rates.r1 > 0.0);
  CHECK_FALSE(lo.power_warning);
  CHECK(lo.mean_power == doctest::Approx(10.0));
}

TEST_CASE("sweep matches single thresholds bit for bit") {
  const auto sc = rayleigh_scenario(2, 3.0, 11);
  const auto thetas = quantile_thetas(6);
  const auto sweep = threshold_sweep(sc, thetas, 5000);
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    const auto one = threshold_rates(sc, thetas[j], 5000);
    CHECK(sweep[j].rates.r1 == one.rates.r1);
    CHECK(sweep[j].rates.r2 == one.rates.r2);
    CHECK(sweep[j].se.r1 == one.se.r1);
    CHECK(sweep[j].se.r2 == one.se.r2);
  }
  const auto again = threshold_sweep(sc, thetas, 5000);
  for (std::size_t j = 0; j < thetas.size(); ++j) CHECK(again[j].rates.r1 == sweep[j].rates.r1);
}

TEST_CASE("sweep is monotone in theta") {
  const auto sc = rayleigh_scenario(1, 10.0, 2);
  const auto rows = threshold_sweep(sc, quantile_thetas(9), 20000);
  for (std::size_t j = 1; j < rows.size(); ++j) {
    CHECK(rows[j].rates.r1 >= rows[j - 1].rates.r1);
    CHECK(rows[j].rates.r2 <= rows[j - 1].rates.r2);
  }
}

TEST_CASE("quantile thresholds") {
  const auto t = quantile_thetas(5);
  REQUIRE(t.size() == 5);
  CHECK(t[0] == 0.0);
  CHECK(t[2] == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(t[4]));
  CHECK_THROWS_AS(quantile_thetas(1), ValidationError);
}

TEST_CASE("cell masses") {
  const QuantGrid grid({0.0, 0.5, 2.0});
  const auto m = cell_masses(Exponential{2.0}, grid, 0, 0);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == doctest::Approx(1.0 - std::exp(-0.25)));
  CHECK(m[1] == doctest::Approx(std::exp(-0.25) - std::exp(-1.0)));
  CHECK(m[2] == doctest::Approx(std::exp(-1.0)));
  const auto d = cell_masses(Deterministic{0.5}, grid, 0, 0);
  CHECK(d[1] == 1.0);
  const auto g = cell_masses(Gamma{1.0, 2.0}, grid, 3, 200000);
  for (std::size_t c = 0; c < 3; ++c) CHECK(g[c] == doctest::Approx(m[c]).epsilon(0.02));
  CHECK(grid.cell(0.5) == 1);
  CHECK(grid.cell(7.0) == 2);
  CHECK(std::isinf(grid.ceiling(2)));
}

TEST_CASE("grid validation and state indexing") {
  CHECK_THROWS_AS(QuantGrid({0.0}), ValidationError);
  CHECK_THROWS_AS(QuantGrid({0.1, 1.0}), ValidationError);
  CHECK_THROWS_AS(QuantGrid({0.0, 1.0, 1.0}), ValidationError);
  const auto grid = QuantGrid::uniform(3, 6.0);
  CHECK(grid.states(3) == 64);
  for (std::size_t s = 0; s < 64; ++s) CHECK(grid.state_index(grid.state_cells(s, 3)) == s);
}

TEST_CASE("one-interval grid lower-bounds the ergodic rates") {
  const auto sc = rayleigh_scenario(1, 10.0, 4);
  const QuantGrid grid({0.0, 1.0});
  const auto pol = tabulate_threshold(grid, 1, 1.0, 10.0);
  const auto q = quantized_rates(sc, pol);
  const auto mc = fading_rates_mc(sc, pol, 100000);
  CHECK(q.r1 <= mc.rates.r1 + 3 * mc.se.r1);
  CHECK(q.r2 <= mc.rates.r2 + 3 * mc.se.r2);
  CHECK(q.r1 >= 0.0);
  CHECK(q.r2 >= 0.0);
}

TEST_CASE("nested grids increase the quantized rates") {
  const auto sc = rayleigh_scenario(2, 10.0, 6);
  RatePair prev{0.0, 0.0};
  for (std::size_t n : {2, 4, 8}) {
    const QuantGrid grid = QuantGrid::uniform(n, 8.0);
    const auto r = quantized_rates(sc, tabulate_threshold(grid, 2, 4.0, 10.0));
    CHECK(r.r1 >= prev.r1 - 1e-15);
    CHECK(r.r2 >= prev.r2 - 1e-15);
    prev = r;
  }
}

TEST_CASE("weighted states reduce to the Gaussian terms") {
  const WeightedState s{1.0, {2.0, 0.5}, 1.0, 6.0, 2.0};
  const auto r = weighted_state_rates({s});
  CHECK(r.r1 == doctest::Approx(std::min(gaussian::rate_term_a1(2.0, 2.0, 1.0), gaussian::rate_term_a1(2.0, 0.5, 1.0))));
  CHECK(r.r2 == doctest::Approx(std::min(gaussian::rate_term_a2(6.0, 2.0, 2.0, 1.0),
                                         gaussian::rate_term_a2(6.0, 2.0, 0.5, 1.0))));
  auto half = s;
  half.probability = 0.5;
  const auto twice = weighted_state_rates({half, half});
  CHECK(twice.r1 == doctest::Approx(r.r1));
  CHECK(twice.r2 == doctest::Approx(r.r2));
  const WeightedState a{0.25, {0.5}, 2.0, 4.0, 4.0};
  const WeightedState b{0.75, {3.0}, 1.0, 4.0, 0.0};
  const auto mix = weighted_state_rates({a, b});
  CHECK(mix.r1 == doctest::Approx(0.25 * gaussian::rate_term_a1(4.0, 0.5, 2.0)));
  CHECK(mix.r2 == doctest::Approx(0.75 * gaussian::rate_term_a2(4.0, 0.0, 3.0, 1.0)));
  CHECK_THROWS_AS(weighted_state_rates({half}), ValidationError);
  CHECK_THROWS_AS(weighted_state_rates({WeightedState{1.0, {1.0}, 1.0, 1.0, 2.0}}), ValidationError);
}

TEST_CASE("time sharing") {
  const auto r = time_sharing_baseline({1.0, 0.0}, {0.0, 2.0}, 0.25);
  CHECK(r.r1 == doctest::Approx(0.25));
  CHECK(r.r2 == doctest::Approx(1.5));
  CHECK_THROWS_AS(time_sharing_baseline({1.0, 0.0}, {0.0, 2.0}, 1.5), ValidationError);
}

TEST_CASE("larger budget dominates") {
  const auto data = fig2_sweep({10.0, 100.0}, quantile_thetas(6), 20000, 7);
  REQUIRE(data.curves.size() == 12);
  for (std::size_t j = 0; j < 6; ++j) {
    const auto& lo = data.curves[j].rates.rates;
    const auto& hi = data.curves[6 + j].rates.rates;
    CHECK(hi.r1 >= lo.r1);
    CHECK(hi.r2 >= lo.r2);
  }
  CHECK(data.chords.size() == 4);
}

TEST_CASE("scenario validation") {
  CHECK_THROWS_AS(rayleigh_scenario(0, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(rayleigh_scenario(1, -1.0, 0), ValidationError);
  FadingScenario s = rayleigh_scenario(1, 1.0, 0);
  s.g = Gamma{0.0, 1.0};
  CHECK_THROWS_AS(validate_scenario(s), ValidationError);
  CHECK_THROWS_AS(threshold_rates(rayleigh_scenario(1, 1.0, 0), -1.0, 10), ValidationError);
}

}  // TEST_SUITE
