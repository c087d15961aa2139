// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 unless
// --strict is given and some criterion fails.

#include "rbc/codesim.hpp"
#include "rbc/dmc_region.hpp"
#include "rbc/fading.hpp"
#include "rbc/gaussian_region.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

using namespace rbc;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets.
constexpr double kKktTol = 1e-6;
constexpr double kBetaTol = 1e-9;
constexpr double kCriterion1Seconds = 60.0;
constexpr double kCornerTol = 1e-12;
constexpr double kGridStep = 1e-3;
constexpr double kGridTol = 1e-3;
constexpr double kDmcTol = 2e-3;
constexpr double kSigmas = 3.0;
constexpr double kStepSigmas = 2.0;
constexpr double kChordGain = 0.15;
constexpr double kCriterion6Seconds = 300.0;
constexpr double kGroup2Error = 0.05;
constexpr double kLeakage = 0.1;
constexpr double kNoBinningLeakage = 0.2;
constexpr double kIndependenceP = 0.01;
constexpr double kCriterion8Seconds = 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double clip(double v) { return v > 0.0 ? v : 0.0; }
double a1(double q, double s, double d) { return clip(0.5 * std::log((q + s) / s) - 0.5 * std::log((q + d) / d)); }
double a2(double p, double q, double s, double d) {
  return clip(0.5 * std::log((p + d) / (q + d)) - 0.5 * std::log((p + s) / (q + s)));
}

struct Instance {
  std::vector<std::vector<double>> sigma;
  std::vector<double> delta;
  std::vector<double> power;
};

Instance random_instance(std::mt19937_64& rng, int max_m, int max_k) {
  std::uniform_real_distribution<double> var(0.25, 4.0), pw(0.5, 8.0);
  std::uniform_int_distribution<int> dm(1, max_m), dk(1, max_k);
  Instance in;
  const int m = dm(rng), k = dk(rng);
  in.sigma.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(m)));
  in.delta.resize(static_cast<std::size_t>(m));
  in.power.resize(static_cast<std::size_t>(m));
  for (auto& row : in.sigma)
    for (double& v : row) v = var(rng);
  for (double& v : in.delta) v = var(rng);
  for (double& v : in.power) v = pw(rng);
  return in;
}

// Every receiver is stronger than group 2 somewhere and weaker somewhere,
// and some sub-channel mixes both, so neither corner is trivial.
bool nondegenerate(const Instance& in) {
  const std::size_t m = in.delta.size();
  bool mixed = false;
  for (const auto& row : in.sigma) {
    bool y = false, z = false;
    for (std::size_t i = 0; i < m; ++i) {
      y = y || row[i] < in.delta[i];
      z = z || row[i] > in.delta[i];
    }
    if (!(y && z)) return false;
  }
  for (std::size_t i = 0; i < m; ++i) {
    bool y = false, z = false;
    for (const auto& row : in.sigma) {
      y = y || row[i] < in.delta[i];
      z = z || row[i] > in.delta[i];
    }
    mixed = mixed || (y && z);
  }
  return mixed;
}

ParallelGaussianChannel to_channel(const Instance& in) {
  return ParallelGaussianChannel(in.sigma, in.delta, PerSubChannelPower{in.power});
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::size_t points = 0, bad = 0;
  double worst = 0.0, worst_beta = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto ch = to_channel(random_instance(rng, 4, 4));
    for (const auto& p : gaussian::boundary_sweep(ch, 11)) {
      ++points;
      double beta = 0.0;
      for (double b : p.certificate.beta) beta += b;
      const double r = p.certificate.residuals.max();
      worst = std::max(worst, r);
      worst_beta = std::max(worst_beta, std::abs(beta - 1.0));
      if (!p.error.empty() || !(r <= kKktTol) || !(std::abs(beta - 1.0) <= kBetaTol)) ++bad;
    }
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < kCriterion1Seconds,
          fmt::format("{} points, {} failing, max residual {:.2e}, max |sum beta - 1| {:.2e}, {:.1f} s", points, bad,
                      worst, worst_beta, t)};
}

Outcome criterion2() {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Instance in = random_instance(rng, 4, 4);
    const auto ch = to_channel(in);
    double r1 = std::numeric_limits<double>::infinity(), r2 = r1;
    for (const auto& row : in.sigma) {
      double f = 0.0, g = 0.0;
      for (std::size_t i = 0; i < in.delta.size(); ++i) {
        const double s = row[i], d = in.delta[i], p = in.power[i];
        f += clip(0.5 * std::log1p(p / s) - 0.5 * std::log1p(p / d));
        g += clip(0.5 * std::log1p(p / d) - 0.5 * std::log1p(p / s));
      }
      r1 = std::min(r1, f);
      r2 = std::min(r2, g);
    }
    const auto at_p = gaussian::region_point(ch, PowerSplit{in.power});
    const auto at_0 = gaussian::region_point(ch, PowerSplit{std::vector<double>(in.delta.size(), 0.0)});
    worst = std::max({worst, std::abs(at_p.r1 - r1), std::abs(at_p.r2), std::abs(at_0.r1), std::abs(at_0.r2 - r2),
                      std::abs(gaussian::r1_corner(ch) - r1), std::abs(gaussian::r2_corner(ch) - r2)});
  }
  return {worst <= kCornerTol, fmt::format("100 instances, max deviation {:.2e}", worst)};
}

// Largest R2 over a Q lattice of step kGridStep subject to R1 >= target.
std::vector<double> grid_best(const Instance& in, const std::vector<double>& targets) {
  const std::size_t m = in.delta.size(), k = in.sigma.size();
  std::vector<std::vector<double>> levels(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto steps = static_cast<std::size_t>(std::floor(in.power[i] / kGridStep));
    for (std::size_t j = 0; j <= steps; ++j) levels[i].push_back(static_cast<double>(j) * kGridStep);
    if (levels[i].back() < in.power[i]) levels[i].push_back(in.power[i]);
  }
  std::vector<std::vector<std::vector<double>>> tf(m, std::vector<std::vector<double>>(k)), tg = tf;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < k; ++r)
      for (double q : levels[i]) {
        tf[i][r].push_back(a1(q, in.sigma[r][i], in.delta[i]));
        tg[i][r].push_back(a2(in.power[i], q, in.sigma[r][i], in.delta[i]));
      }
  std::vector<double> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> best(sorted.size(), -1.0);
  const std::size_t n1 = levels[0].size(), n2 = m == 2 ? levels[1].size() : 1;
  for (std::size_t j1 = 0; j1 < n1; ++j1)
    for (std::size_t j2 = 0; j2 < n2; ++j2) {
      double f = std::numeric_limits<double>::infinity(), g = f;
      for (std::size_t r = 0; r < k; ++r) {
        double fr = tf[0][r][j1], gr = tg[0][r][j1];
        if (m == 2) {
          fr += tf[1][r][j2];
          gr += tg[1][r][j2];
        }
        f = std::min(f, fr);
        g = std::min(g, gr);
      }
      const auto idx = std::upper_bound(sorted.begin(), sorted.end(), f + 1e-12) - sorted.begin() - 1;
      if (idx >= 0) best[static_cast<std::size_t>(idx)] = std::max(best[static_cast<std::size_t>(idx)], g);
    }
  for (std::size_t j = sorted.size() - 1; j-- > 0;) best[j] = std::max(best[j], best[j + 1]);
  std::vector<double> out;
  for (double t : targets)
    out.push_back(best[static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin())]);
  return out;
}

Outcome criterion3() {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  std::size_t points = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Instance in;
    do in = random_instance(rng, 2, 3);
    while (!nondegenerate(in));
    const auto sweep = gaussian::boundary_sweep(to_channel(in), 11);
    std::vector<double> targets;
    for (const auto& p : sweep) targets.push_back(p.r1_target);
    const auto oracle = grid_best(in, targets);
    for (std::size_t j = 0; j < sweep.size(); ++j) {
      ++points;
      const double dev = sweep[j].error.empty() ? std::abs(sweep[j].rates.r2 - oracle[j])
                                                : std::numeric_limits<double>::infinity();
      worst = std::max(worst, dev);
    }
  }
  return {worst <= kGridTol, fmt::format("20 instances, {} points, max |R2 - grid| {:.2e}", points, worst)};
}

double binary_entropy(double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log(p) - (1 - p) * std::log(1 - p); }

Outcome criterion4() {
  Eigen::MatrixXd wz(2, 2), bsc(2, 2);
  wz << 1.0, 0.0, 0.3, 0.7;
  bsc << 0.9, 0.1, 0.1, 0.9;
  const Eigen::MatrixXd wy = wz * bsc;
  DegradedDMC ch({DmcSubChannel{wz, {wy}, SubChannelOrder{{0}, 0}}});
  double oracle = 0.0;
  for (int j = 0; j <= 10000; ++j) {
    const double p = j * 1e-4;  // P(x = 1)
    const double izx = binary_entropy(p * wz(1, 1)) - p * binary_entropy(wz(1, 1));
    const double py1 = (1 - p) * wy(0, 1) + p * wy(1, 1);
    const double iyx = binary_entropy(py1) - (1 - p) * binary_entropy(wy(0, 1)) - p * binary_entropy(wy(1, 1));
    oracle = std::max(oracle, izx - iyx);
  }
  const auto f = dmc::dmc_region_bruteforce(ch);
  const double corner = f.points.front().r2;
  return {std::abs(corner - oracle) <= kDmcTol,
          fmt::format("brute force {:.6f} (grid {}), scan {:.6f}, diff {:.2e}", corner, f.grid_steps, oracle,
                      std::abs(corner - oracle))};
}

Outcome criterion5() {
  const auto sc = fading::rayleigh_scenario(1, 10.0, 7);
  const auto a = fading::threshold_rates(sc, std::numeric_limits<double>::infinity(), 1000000);
  const auto b = fading::threshold_rates(sc, 0.0, 1000000);
  const double sigma = std::hypot(a.se.r1, b.se.r2);
  const double diff = std::abs(a.rates.r1 - b.rates.r2);
  return {diff <= kSigmas * sigma, fmt::format("R1 corner {:.6f}, R2 corner {:.6f}, |diff| = {:.2f} sigma",
                                               a.rates.r1, b.rates.r2, diff / sigma)};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto thetas = fading::quantile_thetas(64);
  bool ok = true;
  std::string detail;
  for (double p : {2.0, 10.0, 100.0}) {
    const auto sc = fading::rayleigh_scenario(1, p, 7);
    const auto curve = fading::threshold_sweep(sc, thetas, 1000000);
    // Corners from independent samples.
    const auto other = fading::rayleigh_scenario(1, p, 8);
    const auto c1 = fading::threshold_rates(other, std::numeric_limits<double>::infinity(), 1000000);
    const auto c2 = fading::threshold_rates(other, 0.0, 1000000);
    const auto& lo = curve.front();
    const auto& hi = curve.back();
    const bool ends = lo.rates.r1 == 0.0 && hi.rates.r2 == 0.0 &&
                      std::abs(hi.rates.r1 - c1.rates.r1) <= kSigmas * std::hypot(hi.se.r1, c1.se.r1) &&
                      std::abs(lo.rates.r2 - c2.rates.r2) <= kSigmas * std::hypot(lo.se.r2, c2.se.r2);
    bool monotone = true;
    for (std::size_t j = 1; j < curve.size(); ++j) {
      const auto& a = curve[j - 1];
      const auto& b = curve[j];
      monotone = monotone && b.rates.r1 >= a.rates.r1 - kStepSigmas * std::hypot(a.se.r1, b.se.r1) &&
                 b.rates.r2 <= a.rates.r2 + kStepSigmas * std::hypot(a.se.r2, b.se.r2);
    }
    const double r1c = hi.rates.r1, r2c = lo.rates.r2;
    std::size_t mid = 0;
    for (std::size_t j = 0; j < curve.size(); ++j)
      if (std::abs(curve[j].rates.r1 - r1c / 2) < std::abs(curve[mid].rates.r1 - r1c / 2)) mid = j;
    const double chord = r2c * (1.0 - curve[mid].rates.r1 / r1c);
    const double gain = curve[mid].rates.r2 / chord - 1.0;
    const bool chord_ok = p != 10.0 || gain >= kChordGain;
    ok = ok && ends && monotone && chord_ok;
    detail += fmt::format("P={}: ends {} monotone {} mid gain {:+.0f}%; ", p, ends ? "ok" : "bad",
                          monotone ? "ok" : "bad", 100.0 * gain);
  }
  const double t = seconds_since(t0);
  ok = ok && t < kCriterion6Seconds;
  return {ok, detail + fmt::format("{:.1f} s", t)};
}

Outcome criterion7() {
  const auto sc = fading::rayleigh_scenario(1, 10.0, 7);
  const double theta = 2.0;
  bool ok = true;
  RatePair prev{-1.0, -1.0};
  std::string detail;
  for (std::size_t n : {4, 8, 16}) {
    const auto grid = fading::QuantGrid::uniform(n, 8.0);
    const auto policy = fading::tabulate_threshold(grid, 1, theta, 10.0);
    const auto q = fading::quantized_rates(sc, policy);
    const auto mc = fading::fading_rates_mc(sc, policy, 1000000);
    const bool below = q.r1 <= mc.rates.r1 + kSigmas * mc.se.r1 && q.r2 <= mc.rates.r2 + kSigmas * mc.se.r2;
    const bool nondecreasing = q.r1 >= prev.r1 && q.r2 >= prev.r2;
    ok = ok && below && nondecreasing;
    prev = q;
    detail += fmt::format("N={}: ({:.4f}, {:.4f}) vs MC ({:.4f}, {:.4f}); ", n, q.r1, q.r2, mc.rates.r1, mc.rates.r2);
  }
  return {ok, detail.substr(0, detail.size() - 2)};
}

Eigen::MatrixXd bsc(double p) {
  Eigen::MatrixXd m(2, 2);
  m << 1 - p, p, p, 1 - p;
  return m;
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  // Sub-channel 1: the receiver is upstream of group 2; sub-channel 2: group 2 is upstream.
  DegradedDMC ch({DmcSubChannel{bsc(0.01) * bsc(0.05), {bsc(0.01)}, SubChannelOrder{{0}, 1}},
                  DmcSubChannel{bsc(0.15), {bsc(0.15) * bsc(0.1)}, SubChannelOrder{{0}, 0}}});
  dmc::AuxiliaryScheme scheme;
  scheme.subchannels.push_back({{0.5, 0.5}, bsc(0.145)});
  scheme.subchannels.push_back({{0.5, 0.5}, bsc(0.0)});
  const RatePair region = dmc::dmc_rate_pair(ch, scheme);
  codesim::ToyCodeConfig cfg;
  cfg.n = 12;
  cfg.r1 = 0.9 * region.r1;
  cfg.r2 = 0.9 * region.r2;
  cfg.seed = 1;
  const auto code = codesim::build_code(ch, scheme, cfg);
  const auto sim = codesim::simulate(code, 100000);
  const auto leak = codesim::exact_leakage(code);
  const auto ind = codesim::check_conditional_independence(code, 100000);
  cfg.binning = false;
  const auto open = codesim::build_code(ch, scheme, cfg);
  const auto open_leak = codesim::exact_leakage(open);
  const double t = seconds_since(t0);

  const bool g2 = sim.group2_error < kGroup2Error;
  const bool l1 = leak.m1_z < kLeakage;
  const bool l2 = leak.m2_y[0] < kLeakage;
  const bool indep = ind.adjusted_p > kIndependenceP;
  const bool open_ok = open_leak.m2_y[0] > kNoBinningLeakage;
  return {g2 && l1 && l2 && indep && open_ok && t < kCriterion8Seconds,
          fmt::format("group-2 error {:.4f} [{}], I(m1;z)/n {:.4f} [{}], I(m2;y)/n {:.4f} [{}], G-test adjusted p "
                      "{:.3f} [{}], no binning I(m2;y)/n {:.4f} [{}], {:.1f} s",
                      sim.group2_error, g2 ? "ok" : "fail", leak.m1_z, l1 ? "ok" : "fail", leak.m2_y[0],
                      l2 ? "ok" : "fail", ind.adjusted_p, indep ? "ok" : "fail", open_leak.m2_y[0],
                      open_ok ? "ok" : "fail", t)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / fmt::format("rbc_accept_{}", ::getpid());
  fs::create_directories(dir);
  const std::string cli = RBC_CLI_PATH;
  const std::string cfg = RBC_CONFIG_DIR;
  const std::vector<std::string> runs = {
      "region gaussian --channel " + cfg + "/gaussian.json --points 6",
      "region total-power --channel " + cfg + "/gaussian_total.json --points 4",
      "region dmc --channel " + cfg + "/dmc_wiretap.json --grid 4",
      "fading sweep --P 2,10,100 --theta-points 16 --samples 100000 --seed 7",
      "fading baseline --P 2,10,100 --samples 100000 --seed 7 --points 5",
      "kkt check --channel " + cfg + "/gaussian.json --q 1,2",
      "simcode --config " + cfg + "/reference_code.json --trials 5000",
  };
  std::size_t identical = 0;
  std::string failures;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::string outputs[2];
    int codes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / fmt::format("run{}_{}.out", r, rep);
      const std::string cmd = cli + " " + runs[r] + " --out " + out.string() + " 2>/dev/null";
      codes[rep] = std::system(cmd.c_str());
      outputs[rep] = slurp(out);
    }
    if (codes[0] == codes[1] && !outputs[0].empty() && outputs[0] == outputs[1]) ++identical;
    else failures += " [" + runs[r].substr(0, runs[r].find(" --")) + "]";
  }
  fs::remove_all(dir);
  return {identical == runs.size(),
          fmt::format("{}/{} subcommands byte-identical{}", identical, runs.size(), failures)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"KKT certification", criterion1},        {"Corner correctness", criterion2},
      {"Gaussian grid oracle", criterion3},     {"DMC wiretap oracle", criterion4},
      {"Fading corner symmetry", criterion5},   {"Threshold sweep figure", criterion6},
      {"Quantization consistency", criterion7}, {"Codebook simulator", criterion8},
      {"CLI determinism", criterion9},
  };
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    fmt::print("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", c + 1, criteria[c].first, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return strict && failed > 0 ? 1 : 0;
}
