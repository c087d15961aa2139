#include "rbc/fading.hpp"

#include "rbc/error.hpp"
#include "rbc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rbc::fading {

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

std::mt19937_64 batch_rng(std::uint64_t seed, std::size_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch)};
  return std::mt19937_64(seq);
}

std::size_t batch_size(std::size_t n, std::size_t batches, std::size_t b) {
  return n / batches + (b < n % batches ? 1 : 0);
}

// log((1 + q h) / (1 + q g)), with q h and q g finite.
double log_ratio(double q, double a, double b) { return std::log1p(q * a) - std::log1p(q * b); }

double r1_integrand(double q, double h, double g) { return std::max(0.0, log_ratio(q, h, g)); }

double r2_integrand(double p, double q, double h, double g) {
  return std::max(0.0, (std::log1p(p * g) - std::log1p(q * g)) - (std::log1p(p * h) - std::log1p(q * h)));
}

struct BatchSums {
  std::vector<double> r1;
  std::vector<double> r2;
  double power = 0.0;
  std::size_t n = 0;
};

// Batch-means standard error of per-batch means.
double batch_se(const std::vector<double>& means) {
  const std::size_t b = means.size();
  if (b < 2) return 0.0;
  const double avg = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double m : means) ss += (m - avg) * (m - avg);
  return std::sqrt(ss / (static_cast<double>(b) * static_cast<double>(b - 1)));
}

McRates summarize(const std::vector<BatchSums>& batches, std::size_t kc, double budget) {
  McRates out;
  std::size_t n = 0;
  for (const auto& b : batches) n += b.n;
  out.samples = n;
  out.r1_receiver.assign(kc, 0.0);
  out.r2_receiver.assign(kc, 0.0);
  double power = 0.0;
  for (const auto& b : batches) {
    for (std::size_t k = 0; k < kc; ++k) {
      out.r1_receiver[k] += b.r1[k];
      out.r2_receiver[k] += b.r2[k];
    }
    power += b.power;
  }
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < kc; ++k) {
    out.r1_receiver[k] /= dn;
    out.r2_receiver[k] /= dn;
  }
  out.mean_power = power / dn;

  const auto k1 = static_cast<std::size_t>(
      std::min_element(out.r1_receiver.begin(), out.r1_receiver.end()) - out.r1_receiver.begin());
  const auto k2 = static_cast<std::size_t>(
      std::min_element(out.r2_receiver.begin(), out.r2_receiver.end()) - out.r2_receiver.begin());
  out.rates = {out.r1_receiver[k1], out.r2_receiver[k2]};

  std::vector<double> m1, m2, mp;
  for (const auto& b : batches) {
    if (b.n == 0) continue;
    const double bn = static_cast<double>(b.n);
    m1.push_back(b.r1[k1] / bn);
    m2.push_back(b.r2[k2] / bn);
    mp.push_back(b.power / bn);
  }
  out.se = {batch_se(m1), batch_se(m2)};
  out.power_se = batch_se(mp);
  out.power_warning = out.mean_power > budget + 3.0 * out.power_se + 1e-12 * budget;
  return out;
}

void check_samples(std::size_t n) {
  if (n < 1) throw ValidationError("sample count must be at least 1");
}

}  // namespace

double sample_gain(const GainDistribution& d, std::mt19937_64& rng) {
  return std::visit(Overload{
                        [&](const Exponential& e) { return std::exponential_distribution<double>(1.0 / e.mean)(rng); },
                        [](const Deterministic& c) { return c.value; },
                        [&](const Gamma& g) { return std::gamma_distribution<double>(g.shape, g.scale)(rng); },
                    },
                    d);
}

void validate_gain(const GainDistribution& d) {
  std::visit(Overload{
                 [](const Exponential& e) {
                   if (!(e.mean > 0.0) || !std::isfinite(e.mean)) throw ValidationError("exponential mean must be positive");
                 },
                 [](const Deterministic& c) {
                   if (!(c.value >= 0.0) || !std::isfinite(c.value)) throw ValidationError("deterministic gain must be nonnegative");
                 },
                 [](const Gamma& g) {
                   if (!(g.shape > 0.0) || !(g.scale > 0.0) || !std::isfinite(g.shape) || !std::isfinite(g.scale))
                     throw ValidationError("gamma shape and scale must be positive");
                 },
             },
             d);
}

std::string describe(const GainDistribution& d) {
  return std::visit(Overload{
                        [](const Exponential& e) { return "exponential(mean=" + std::to_string(e.mean) + ")"; },
                        [](const Deterministic& c) { return "deterministic(" + std::to_string(c.value) + ")"; },
                        [](const Gamma& g) {
                          return "gamma(shape=" + std::to_string(g.shape) + ", scale=" + std::to_string(g.scale) + ")";
                        },
                    },
                    d);
}

FadingScenario rayleigh_scenario(std::size_t receivers, double power, std::uint64_t seed) {
  FadingScenario s;
  s.h.assign(receivers, Exponential{1.0});
  s.g = Exponential{1.0};
  s.power = power;
  s.seed = seed;
  validate_scenario(s);
  return s;
}

void validate_scenario(const FadingScenario& s) {
  if (s.h.empty()) throw ValidationError("at least one group-1 receiver is required");
  if (!(s.power > 0.0) || !std::isfinite(s.power)) throw ValidationError("power budget must be positive and finite");
  for (const auto& d : s.h) validate_gain(d);
  validate_gain(s.g);
}

Tabulated tabulate_threshold(const QuantGrid& grid, std::size_t receivers, double theta, double power) {
  if (!(theta >= 0.0)) throw ValidationError("theta must be nonnegative");
  Tabulated t{grid, {}, {}};
  const std::size_t n = grid.states(receivers + 1);
  t.p.assign(n, power);
  t.q.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t gc = grid.state_cells(s, receivers + 1).back();
    // The cell's lower end decides; exact when theta is a level.
    if (grid.floor(gc) < theta) t.q[s] = power;
  }
  return t;
}

McRates fading_rates_mc(const FadingScenario& scenario, const PowerPolicy& policy, std::size_t n_samples) {
  validate_scenario(scenario);
  check_samples(n_samples);
  const std::size_t kc = scenario.receivers();
  if (const auto* t = std::get_if<Threshold>(&policy); t && !(t->theta >= 0.0))
    throw ValidationError("theta must be nonnegative");
  if (const auto* t = std::get_if<Tabulated>(&policy)) {
    const std::size_t n = t->grid.states(kc + 1);
    if (t->p.size() != n || t->q.size() != n)
      throw ValidationError("tabulated policy needs " + std::to_string(n) + " states");
    for (std::size_t s = 0; s < n; ++s)
      if (!(t->q[s] >= 0.0) || !(t->q[s] <= t->p[s]) || !std::isfinite(t->p[s]))
        throw ValidationError("tabulated policy violates 0 <= Q <= P at state " + std::to_string(s));
  }

  const std::size_t nb = std::min(kBatches, n_samples);
  std::vector<BatchSums> batches(nb);
  parallel_for(nb, [&](std::size_t b) {
    auto rng = batch_rng(scenario.seed, b);
    BatchSums& acc = batches[b];
    acc.r1.assign(kc, 0.0);
    acc.r2.assign(kc, 0.0);
    acc.n = batch_size(n_samples, nb, b);
    std::vector<double> h(kc);
    std::vector<std::size_t> cells(kc + 1);
    for (std::size_t s = 0; s < acc.n; ++s) {
      for (std::size_t k = 0; k < kc; ++k) h[k] = sample_gain(scenario.h[k], rng);
      const double g = sample_gain(scenario.g, rng);
      double p = scenario.power;
      double q = 0.0;
      if (const auto* t = std::get_if<Threshold>(&policy)) {
        q = g < t->theta ? p : 0.0;
      } else {
        const auto& tab = std::get<Tabulated>(policy);
        for (std::size_t k = 0; k < kc; ++k) cells[k] = tab.grid.cell(h[k]);
        cells[kc] = tab.grid.cell(g);
        const std::size_t idx = tab.grid.state_index(cells);
        p = tab.p[idx];
        q = tab.q[idx];
      }
      for (std::size_t k = 0; k < kc; ++k) {
        acc.r1[k] += r1_integrand(q, h[k], g);
        acc.r2[k] += r2_integrand(p, q, h[k], g);
      }
      acc.power += p;
    }
  });
  return summarize(batches, kc, scenario.power);
}

McRates threshold_rates(const FadingScenario& scenario, double theta, std::size_t n_samples) {
  return fading_rates_mc(scenario, Threshold{theta}, n_samples);
}

std::vector<McRates> threshold_sweep(const FadingScenario& scenario, const std::vector<double>& thetas,
                                     std::size_t n_samples) {
  validate_scenario(scenario);
  check_samples(n_samples);
  for (double t : thetas)
    if (!(t >= 0.0)) throw ValidationError("theta must be nonnegative");
  const std::size_t kc = scenario.receivers();
  const std::size_t nt = thetas.size();
  const std::size_t nb = std::min(kBatches, n_samples);
  const double p = scenario.power;

  // batches[b][j]
  std::vector<std::vector<BatchSums>> batches(nb, std::vector<BatchSums>(nt));
  parallel_for(nb, [&](std::size_t b) {
    auto rng = batch_rng(scenario.seed, b);
    const std::size_t n = batch_size(n_samples, nb, b);
    for (auto& acc : batches[b]) {
      acc.r1.assign(kc, 0.0);
      acc.r2.assign(kc, 0.0);
      acc.n = n;
    }
    std::vector<double> h(kc), v1(kc), v2(kc);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t k = 0; k < kc; ++k) h[k] = sample_gain(scenario.h[k], rng);
      const double g = sample_gain(scenario.g, rng);
      for (std::size_t k = 0; k < kc; ++k) {
        v1[k] = r1_integrand(p, h[k], g);
        v2[k] = r2_integrand(p, 0.0, h[k], g);
      }
      for (std::size_t j = 0; j < nt; ++j) {
        BatchSums& acc = batches[b][j];
        const bool cloud_only = g < thetas[j];
        for (std::size_t k = 0; k < kc; ++k) {
          // The zero terms keep the summation identical to fading_rates_mc.
          acc.r1[k] += cloud_only ? v1[k] : 0.0;
          acc.r2[k] += cloud_only ? 0.0 : v2[k];
        }
        acc.power += p;
      }
    }
  });

  std::vector<McRates> out;
  out.reserve(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    std::vector<BatchSums> col;
    col.reserve(nb);
    for (std::size_t b = 0; b < nb; ++b) col.push_back(batches[b][j]);
    out.push_back(summarize(col, kc, p));
  }
  return out;
}

RatePair time_sharing_baseline(const RatePair& corner1, const RatePair& corner2, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  return {lambda * corner1.r1 + (1.0 - lambda) * corner2.r1, lambda * corner1.r2 + (1.0 - lambda) * corner2.r2};
}

std::vector<double> quantile_thetas(std::size_t n) {
  if (n < 2) throw ValidationError("at least two theta points are required");
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = j + 1 == n ? std::numeric_limits<double>::infinity()
                      : -std::log1p(-static_cast<double>(j) / static_cast<double>(n - 1));
  return t;
}

Fig2Data fig2_sweep(const std::vector<double>& powers, const std::vector<double>& thetas,
                    std::size_t n_samples, std::uint64_t seed, std::size_t chord_points) {
  if (powers.empty() || thetas.empty()) throw ValidationError("power and theta lists must be nonempty");
  if (chord_points < 2) throw ValidationError("a chord needs at least two points");
  Fig2Data out;
  for (double p : powers) {
    const FadingScenario sc = rayleigh_scenario(1, p, seed);
    const auto curve = threshold_sweep(sc, thetas, n_samples);
    for (std::size_t j = 0; j < thetas.size(); ++j) out.curves.push_back({p, thetas[j], curve[j]});
    const auto corners = threshold_sweep(sc, {std::numeric_limits<double>::infinity(), 0.0}, n_samples);
    for (std::size_t c = 0; c < chord_points; ++c) {
      const double lambda = static_cast<double>(c) / static_cast<double>(chord_points - 1);
      out.chords.push_back({p, lambda, time_sharing_baseline(corners[0].rates, corners[1].rates, lambda)});
    }
  }
  return out;
}

}  // namespace rbc::fading
