#include "rbc/error.hpp"
#include "rbc/fading.hpp"
#include "rbc/gaussian_region.hpp"

#include <algorithm>
#include <cmath>

namespace rbc::fading {

namespace {

constexpr std::size_t kMaxStates = 10'000'000;

// {log((1 + q s) / (1 + q c))}^+ with an infinite c giving 0.
double a1_term(double q, double s, double c) {
  if (q <= 0.0 || std::isinf(c)) return 0.0;
  return std::max(0.0, std::log1p(q * s) - std::log1p(q * c));
}

// {log((1+p s)/(1+q s)) - log((1+p c)/(1+q c))}^+. As c grows the second
// term tends to log(p/q) >= the first, so an infinite c gives 0.
double a2_term(double p, double q, double s, double c) {
  if (std::isinf(c)) return 0.0;
  return std::max(0.0, (std::log1p(p * s) - std::log1p(q * s)) - (std::log1p(p * c) - std::log1p(q * c)));
}

}  // namespace

QuantGrid::QuantGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 2) throw ValidationError("a quantization grid needs N >= 1");
  if (levels_.front() != 0.0) throw ValidationError("the first quantization level must be 0");
  for (std::size_t q = 0; q < levels_.size(); ++q) {
    if (!std::isfinite(levels_[q])) throw ValidationError("quantization levels must be finite");
    if (q > 0 && !(levels_[q] > levels_[q - 1])) throw ValidationError("quantization levels must be strictly increasing");
  }
}

QuantGrid QuantGrid::uniform(std::size_t n, double j) {
  if (n < 1) throw ValidationError("a quantization grid needs N >= 1");
  if (!(j > 0.0) || !std::isfinite(j)) throw ValidationError("J must be positive and finite");
  std::vector<double> levels(n + 1);
  for (std::size_t q = 0; q <= n; ++q) levels[q] = j * static_cast<double>(q) / static_cast<double>(n);
  levels[n] = j;
  return QuantGrid(std::move(levels));
}

std::size_t QuantGrid::cell(double gain) const {
  const auto it = std::upper_bound(levels_.begin(), levels_.end(), gain);
  if (it == levels_.begin()) return 0;
  return static_cast<std::size_t>(it - levels_.begin()) - 1;
}

std::size_t QuantGrid::states(std::size_t gains) const {
  std::size_t n = 1;
  for (std::size_t g = 0; g < gains; ++g) {
    if (n > kMaxStates / cells()) throw SizeGuardError("quantization grid has too many states");
    n *= cells();
  }
  return n;
}

std::size_t QuantGrid::state_index(const std::vector<std::size_t>& c) const {
  std::size_t idx = 0;
  for (std::size_t v : c) idx = idx * cells() + v;
  return idx;
}

std::vector<std::size_t> QuantGrid::state_cells(std::size_t index, std::size_t gains) const {
  std::vector<std::size_t> c(gains);
  for (std::size_t g = gains; g-- > 0;) {
    c[g] = index % cells();
    index /= cells();
  }
  return c;
}

std::vector<double> cell_masses(const GainDistribution& d, const QuantGrid& grid, std::uint64_t seed,
                                std::size_t samples) {
  validate_gain(d);
  const std::size_t nc = grid.cells();
  std::vector<double> m(nc, 0.0);
  if (const auto* e = std::get_if<Exponential>(&d)) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double hi = grid.ceiling(c);
      m[c] = std::exp(-grid.floor(c) / e->mean) - (std::isinf(hi) ? 0.0 : std::exp(-hi / e->mean));
    }
    return m;
  }
  if (const auto* v = std::get_if<Deterministic>(&d)) {
    m[grid.cell(v->value)] = 1.0;
    return m;
  }
  if (samples < 1) throw ValidationError("cell-mass estimation needs samples");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xce11u};
  std::mt19937_64 rng(seq);
  for (std::size_t s = 0; s < samples; ++s) m[grid.cell(sample_gain(d, rng))] += 1.0;
  for (double& v : m) v /= static_cast<double>(samples);
  return m;
}

RatePair quantized_rates(const FadingScenario& scenario, const Tabulated& policy, const QuantizedOptions& options) {
  validate_scenario(scenario);
  const std::size_t kc = scenario.receivers();
  const QuantGrid& grid = policy.grid;
  const std::size_t n = grid.states(kc + 1);
  if (policy.p.size() != n || policy.q.size() != n)
    throw ValidationError("tabulated policy needs " + std::to_string(n) + " states");

  std::vector<std::vector<double>> mass(kc + 1);
  for (std::size_t k = 0; k < kc; ++k)
    mass[k] = cell_masses(scenario.h[k], grid, scenario.seed + 1 + k, options.cell_mass_samples);
  mass[kc] = cell_masses(scenario.g, grid, scenario.seed, options.cell_mass_samples);

  std::vector<double> r1(kc, 0.0), r2(kc, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto cells = grid.state_cells(s, kc + 1);
    double pr = 1.0;
    for (std::size_t g = 0; g <= kc; ++g) pr *= mass[g][cells[g]];
    if (pr == 0.0) continue;
    const double p = policy.p[s];
    const double q = policy.q[s];
    if (!(q >= 0.0) || !(q <= p)) throw ValidationError("tabulated policy violates 0 <= Q <= P at state " + std::to_string(s));
    const std::size_t gc = cells[kc];
    for (std::size_t k = 0; k < kc; ++k) {
      // Message 1: own gain at the floor, group 2 at the ceiling.
      r1[k] += pr * a1_term(q, grid.floor(cells[k]), grid.ceiling(gc));
      // Message 2: group 2 at the floor, receiver k at the ceiling.
      r2[k] += pr * a2_term(p, q, grid.floor(gc), grid.ceiling(cells[k]));
    }
  }
  return {*std::min_element(r1.begin(), r1.end()), *std::min_element(r2.begin(), r2.end())};
}

RatePair weighted_state_rates(const std::vector<WeightedState>& states) {
  if (states.empty()) throw ValidationError("at least one state is required");
  const std::size_t kc = states.front().sigma_sq.size();
  if (kc == 0) throw ValidationError("at least one group-1 receiver is required");
  double total = 0.0;
  for (const auto& st : states) {
    if (!(st.probability >= 0.0) || !std::isfinite(st.probability))
      throw ValidationError("state probabilities must be nonnegative");
    if (st.sigma_sq.size() != kc) throw ValidationError("every state needs the same number of receivers");
    if (!(st.q >= 0.0) || !(st.q <= st.p)) throw ValidationError("each state needs 0 <= Q <= P");
    total += st.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("state probabilities must sum to 1");

  std::vector<double> r1(kc, 0.0), r2(kc, 0.0);
  for (const auto& st : states)
    for (std::size_t k = 0; k < kc; ++k) {
      r1[k] += st.probability * gaussian::rate_term_a1(st.q, st.sigma_sq[k], st.delta_sq);
      r2[k] += st.probability * gaussian::rate_term_a2(st.p, st.q, st.sigma_sq[k], st.delta_sq);
    }
  return {*std::min_element(r1.begin(), r1.end()), *std::min_element(r2.begin(), r2.end())};
}

}  // namespace rbc::fading
