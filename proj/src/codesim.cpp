#include "rbc/codesim.hpp"

#include "rbc/error.hpp"
#include "rbc/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace rbc::codesim {

namespace {

constexpr int kMaxTupleBits = 20;
constexpr int kMaxMessageBits = 16;
constexpr double kMaxWordsPerSubchannel = 4194304.0;  // 2^22

std::mt19937_64 seeded(std::uint64_t seed, std::initializer_list<std::uint32_t> tags) {
  std::vector<std::uint32_t> v{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  v.insert(v.end(), tags.begin(), tags.end());
  std::seed_seq seq(v.begin(), v.end());
  return std::mt19937_64(seq);
}

std::size_t sample(const double* p, std::size_t n, std::ptrdiff_t stride, std::mt19937_64& rng) {
  const double r = uniform_unit(rng);
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = p[static_cast<std::ptrdiff_t>(j) * stride];
    if (v <= 0.0) continue;
    last = j;
    c += v;
    if (r < c) return j;
  }
  return last;
}

double log_sum_exp(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = begin; j < end; ++j) m = std::max(m, v[j]);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (std::size_t j = begin; j < end; ++j) s += std::exp(v[j] - m);
  return m + std::log(s);
}

Eigen::MatrixXd log_matrix(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd l(w.rows(), w.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      l(r, c) = w(r, c) > 0.0 ? std::log(w(r, c)) : -std::numeric_limits<double>::infinity();
  return l;
}

std::vector<std::uint8_t> pass(const std::vector<std::uint8_t>& x, const Eigen::MatrixXd& w, std::mt19937_64& rng) {
  std::vector<std::uint8_t> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    y[t] = static_cast<std::uint8_t>(sample(w.data() + x[t], static_cast<std::size_t>(w.cols()), w.rows(), rng));
  return y;
}

double word_loglik(const std::uint8_t* x, const std::vector<std::uint8_t>& y, const Eigen::MatrixXd& logw) {
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) s += logw(x[t], y[t]);
  return s;
}

void check_guard(const DegradedDMC& ch, std::size_t n) {
  if (n < 1 || n > kMaxBlocklength)
    throw ValidationError("blocklength must lie in [1, " + std::to_string(kMaxBlocklength) + "]");
  for (std::size_t i = 0; i < ch.subchannels(); ++i) {
    const double nx = static_cast<double>(ch.input_size(i));
    auto check = [&](Eigen::Index outputs, const std::string& what) {
      const double size = std::pow(nx * static_cast<double>(outputs), static_cast<double>(n));
      if (size > kExactGuard)
        throw SizeGuardError("sub-channel " + std::to_string(i) + " " + what + ": (|X||out|)^n = " +
                             std::to_string(size) + " exceeds 2^24");
    };
    check(ch.group2_matrix(i).cols(), "group 2");
    for (std::size_t k = 0; k < ch.receivers(); ++k) check(ch.receiver_matrix(i, k).cols(), "receiver " + std::to_string(k));
    if (ch.input_size(i) > 255) throw SizeGuardError("input alphabets above 255 symbols are not supported");
  }
}

}  // namespace

int CodeSizes::total_cloud_bits() const { return std::accumulate(cloud_bits.begin(), cloud_bits.end(), 0); }

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return static_cast<std::size_t>(v % range);
  }
}

double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

SchemeInfo scheme_info(const DegradedDMC& channel, const dmc::AuxiliaryScheme& scheme) {
  dmc::validate_scheme(channel, scheme);
  SchemeInfo info;
  for (std::size_t i = 0; i < channel.subchannels(); ++i) {
    const auto t = dmc::term_information(channel.pair_law(i, 0), scheme.subchannels[i]);
    info.u_z.push_back(t.u_z);
    info.x_z_given_u.push_back(t.x_z_given_u);
  }
  info.region = dmc::dmc_rate_pair(channel, scheme);
  return info;
}

CodeSizes code_sizes(const SchemeInfo& info, const ToyCodeConfig& c) {
  if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) throw ValidationError("epsilon must be nonnegative");
  if (!(c.r1 >= 0.0) || !(c.r2 >= 0.0) || !std::isfinite(c.r1) || !std::isfinite(c.r2))
    throw ValidationError("target rates must be nonnegative and finite");
  if (c.satellite_extra_bits < 0) throw ValidationError("satellite_extra_bits must be nonnegative");
  const double n = static_cast<double>(c.n);
  const double ln2 = std::log(2.0);
  CodeSizes s;
  for (std::size_t i = 0; i < info.u_z.size(); ++i) {
    s.cloud_bits.push_back(std::max(0, round_half_up(n * (info.u_z[i] - 2.0 * c.epsilon) / ln2)));
    s.satellite_bits.push_back(std::max(0, round_half_up(n * (info.x_z_given_u[i] + c.epsilon) / ln2)) +
                               c.satellite_extra_bits);
  }
  s.m1_bits = round_half_up(n * c.r1 / ln2);
  s.m2_bits = c.binning ? round_half_up(n * c.r2 / ln2) : s.total_cloud_bits();
  s.bin_bits = s.total_cloud_bits() - s.m2_bits;
  if (s.bin_bits < 0)
    throw ValidationError("R2 needs " + std::to_string(s.m2_bits) + " bits but the cloud books carry only " +
                          std::to_string(s.total_cloud_bits()));
  if (s.total_cloud_bits() > kMaxTupleBits) throw SizeGuardError("cloud books exceed 2^20 tuples");
  if (s.m1_bits > kMaxMessageBits) throw SizeGuardError("message 1 exceeds 2^16 values");
  return s;
}

const std::uint8_t* ToyCode::cloud(std::size_t i, std::size_t a) const { return clouds_[i].data() + a * config_.n; }

const std::uint8_t* ToyCode::satellite(std::size_t i, std::size_t a, std::size_t m1, std::size_t l) const {
  return satellites_[i].data() + ((a * m1_count() + m1) * satellites(i) + l) * config_.n;
}

std::vector<std::size_t> ToyCode::tuple_indices(std::size_t tuple) const {
  std::vector<std::size_t> a(subchannels());
  for (std::size_t i = subchannels(); i-- > 0;) {
    a[i] = tuple % clouds(i);
    tuple /= clouds(i);
  }
  return a;
}

std::size_t ToyCode::tuple_of(const std::vector<std::size_t>& a) const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < subchannels(); ++i) t = t * clouds(i) + a[i];
  return t;
}

std::uint64_t ToyCode::digest() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const auto& c : clouds_)
    for (auto v : c) mix(v);
  for (const auto& s : satellites_)
    for (auto v : s) mix(v);
  for (auto v : bin_of_) mix(v);
  return h;
}

ToyCode build_code(const DegradedDMC& channel, const dmc::AuxiliaryScheme& scheme, const ToyCodeConfig& config) {
  check_guard(channel, config.n);
  ToyCode code(channel);
  code.config_ = config;
  code.info_ = scheme_info(channel, scheme);
  code.sizes_ = code_sizes(code.info_, config);
  const std::size_t n = config.n;
  const std::size_t m = channel.subchannels();
  const std::size_t nm1 = code.m1_count();

  for (std::size_t i = 0; i < m; ++i) {
    const double words = static_cast<double>(code.clouds(i)) * static_cast<double>(nm1) * static_cast<double>(code.satellites(i));
    if (words > kMaxWordsPerSubchannel)
      throw SizeGuardError("sub-channel " + std::to_string(i) + " needs " + std::to_string(words) + " satellite words");
  }

  code.clouds_.resize(m);
  code.satellites_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& s = scheme.subchannels[i];
    const std::size_t na = code.clouds(i);
    auto rng = seeded(config.seed, {1u, static_cast<std::uint32_t>(i)});
    code.clouds_[i].resize(na * n);
    for (std::size_t j = 0; j < na * n; ++j)
      code.clouds_[i][j] = static_cast<std::uint8_t>(sample(s.pu.data(), s.pu.size(), 1, rng));

    const std::size_t nl = code.satellites(i);
    code.satellites_[i].resize(na * nm1 * nl * n);
    const Eigen::MatrixXd& pxu = s.px_given_u;
    parallel_for(na, [&](std::size_t a) {
      const std::uint8_t* u = code.clouds_[i].data() + a * n;
      for (std::size_t m1 = 0; m1 < nm1; ++m1) {
        auto r = seeded(config.seed, {2u, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(a),
                                      static_cast<std::uint32_t>(m1)});
        std::uint8_t* out = code.satellites_[i].data() + (a * nm1 + m1) * nl * n;
        for (std::size_t l = 0; l < nl; ++l)
          for (std::size_t t = 0; t < n; ++t)
            out[l * n + t] = static_cast<std::uint8_t>(
                sample(pxu.data() + u[t], static_cast<std::size_t>(pxu.cols()), pxu.rows(), r));
      }
    });
  }

  // Random equal-size partition of M2 into bins.
  const std::size_t nt = code.tuples();
  std::vector<std::uint32_t> perm(nt);
  std::iota(perm.begin(), perm.end(), 0u);
  auto rng = seeded(config.seed, {3u});
  for (std::size_t j = nt; j > 1; --j) std::swap(perm[j - 1], perm[uniform_index(rng, j)]);
  const std::size_t l2 = code.bin_size();
  code.bin_of_.assign(nt, 0);
  code.members_.assign(code.bins(), {});
  for (std::size_t j = 0; j < nt; ++j) {
    code.bin_of_[perm[j]] = static_cast<std::uint32_t>(j / l2);
    code.members_[j / l2].push_back(perm[j]);
  }
  return code;
}

Encoding encode(const ToyCode& code, std::size_t m1, std::size_t m2, std::mt19937_64& rng) {
  if (m1 >= code.m1_count()) throw ValidationError("message 1 out of range");
  if (m2 >= code.bins()) throw ValidationError("message 2 out of range");
  const std::size_t m = code.subchannels();
  Encoding e;
  if (code.config().shared_index) {
    std::size_t top = 0;
    for (std::size_t i = 0; i < m; ++i) top = std::max(top, code.clouds(i));
    const std::size_t r = uniform_index(rng, top);
    e.cloud.resize(m);
    for (std::size_t i = 0; i < m; ++i) e.cloud[i] = r % code.clouds(i);
    e.tuple = code.tuple_of(e.cloud);
  } else {
    const auto& members = code.bin_members(m2);
    e.tuple = members[uniform_index(rng, members.size())];
    e.cloud = code.tuple_indices(e.tuple);
  }
  const std::size_t n = code.config().n;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t l = uniform_index(rng, code.satellites(i));
    e.satellite.push_back(l);
    const std::uint8_t* x = code.satellite(i, e.cloud[i], m1, l);
    e.words.emplace_back(x, x + n);
  }
  return e;
}

SimReport simulate(const ToyCode& code, std::size_t trials) {
  if (trials < 1) throw ValidationError("at least one trial is required");
  const DegradedDMC& ch = code.channel();
  const std::size_t m = code.subchannels();
  const std::size_t kc = ch.receivers();
  const std::size_t nm1 = code.m1_count();

  std::vector<Eigen::MatrixXd> log_z(m);
  std::vector<std::vector<Eigen::MatrixXd>> log_y(m);
  for (std::size_t i = 0; i < m; ++i) {
    log_z[i] = log_matrix(ch.group2_matrix(i));
    for (std::size_t k = 0; k < kc; ++k) log_y[i].push_back(log_matrix(ch.receiver_matrix(i, k)));
  }

  const std::size_t nb = std::min<std::size_t>(32, trials);
  std::vector<std::vector<std::size_t>> g1_errors(nb, std::vector<std::size_t>(kc, 0));
  std::vector<std::size_t> g2_errors(nb, 0);
  parallel_for(nb, [&](std::size_t b) {
    auto rng = seeded(code.config().seed, {4u, static_cast<std::uint32_t>(b)});
    const std::size_t count = trials / nb + (b < trials % nb ? 1 : 0);
    std::vector<double> ll, score(nm1);
    for (std::size_t trial = 0; trial < count; ++trial) {
      const std::size_t m1 = uniform_index(rng, nm1);
      const std::size_t m2 = uniform_index(rng, code.bins());
      const Encoding e = encode(code, m1, m2, rng);

      // Group 2: each cloud index by maximum likelihood, then the bin.
      std::vector<std::size_t> a_hat(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto z = pass(e.words[i], ch.group2_matrix(i), rng);
        const std::size_t na = code.clouds(i), nl = code.satellites(i);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a) {
          ll.assign(nm1 * nl, 0.0);
          for (std::size_t mm = 0; mm < nm1; ++mm)
            for (std::size_t l = 0; l < nl; ++l) ll[mm * nl + l] = word_loglik(code.satellite(i, a, mm, l), z, log_z[i]);
          const double v = log_sum_exp(ll, 0, ll.size());
          if (v > best) {
            best = v;
            a_hat[i] = a;
          }
        }
      }
      if (code.bin_of(code.tuple_of(a_hat)) != m2) ++g2_errors[b];

      // Group 1: message 1 by maximum likelihood over its strong sub-channels.
      for (std::size_t k = 0; k < kc; ++k) {
        std::fill(score.begin(), score.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          if (!ch.receiver_upstream(i, k)) continue;
          const auto y = pass(e.words[i], ch.receiver_matrix(i, k), rng);
          const std::size_t na = code.clouds(i), nl = code.satellites(i);
          ll.resize(na * nl);
          for (std::size_t mm = 0; mm < nm1; ++mm) {
            for (std::size_t a = 0; a < na; ++a)
              for (std::size_t l = 0; l < nl; ++l) ll[a * nl + l] = word_loglik(code.satellite(i, a, mm, l), y, log_y[i][k]);
            score[mm] += log_sum_exp(ll, 0, ll.size());
          }
        }
        const auto m1_hat = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
        if (m1_hat != m1) ++g1_errors[b][k];
      }
    }
  });

  SimReport r;
  r.trials = trials;
  r.group1_error.assign(kc, 0.0);
  std::size_t g2 = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    g2 += g2_errors[b];
    for (std::size_t k = 0; k < kc; ++k) r.group1_error[k] += static_cast<double>(g1_errors[b][k]);
  }
  for (double& v : r.group1_error) v /= static_cast<double>(trials);
  r.group2_error = static_cast<double>(g2) / static_cast<double>(trials);
  return r;
}

double g_test_independence(const std::vector<std::vector<std::size_t>>& labels, double& g, double& dof) {
  g = 0.0;
  dof = 0.0;
  const std::size_t vars = labels.size();
  if (vars < 2) return 1.0;
  const std::size_t n = labels.front().size();
  for (const auto& l : labels)
    if (l.size() != n) throw ValidationError("label vectors must have equal length");
  if (n == 0) return 1.0;

  std::vector<std::map<std::size_t, double>> marg(vars);
  std::map<std::vector<std::size_t>, double> joint;
  std::vector<std::size_t> key(vars);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t v = 0; v < vars; ++v) {
      key[v] = labels[v][s];
      marg[v][key[v]] += 1.0;
    }
    joint[key] += 1.0;
  }
  const double dn = static_cast<double>(n);
  for (const auto& [k, o] : joint) {
    double e = dn;
    for (std::size_t v = 0; v < vars; ++v) e *= marg[v][k[v]] / dn;
    g += 2.0 * o * std::log(o / e);
  }
  double cells = 1.0, free = 0.0;
  for (const auto& mv : marg) {
    cells *= static_cast<double>(mv.size());
    free += static_cast<double>(mv.size()) - 1.0;
  }
  dof = cells - 1.0 - free;
  if (dof <= 0.0) return 1.0;
  if (vars == 2) {
    // Williams' correction for two-way tables.
    double inv_r = 0.0, inv_c = 0.0;
    for (const auto& [k, c] : marg[0]) inv_r += 1.0 / c;
    for (const auto& [k, c] : marg[1]) inv_c += 1.0 / c;
    const double q = 1.0 + (dn * inv_r - 1.0) * (dn * inv_c - 1.0) / (6.0 * dn * dof);
    g /= q;
  }
  g = std::max(g, 0.0);
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), g));
}

IndependenceReport check_conditional_independence(const ToyCode& code, std::size_t draws) {
  const std::size_t m = code.subchannels();
  if (m < 2) throw ValidationError("the independence test needs at least two sub-channels");
  if (draws < 1) throw ValidationError("at least one draw is required");
  const std::size_t nm1 = code.m1_count();
  IndependenceReport rep;
  rep.draws = draws;
  rep.p_values.assign(nm1, 1.0);
  rep.g_stats.assign(nm1, 0.0);
  rep.dof.assign(nm1, 0.0);
  parallel_for(nm1, [&](std::size_t m1) {
    auto rng = seeded(code.config().seed, {5u, static_cast<std::uint32_t>(m1)});
    // Words are labeled by content so equal codewords share a category.
    std::vector<std::map<std::vector<std::uint8_t>, std::size_t>> ids(m);
    std::vector<std::vector<std::size_t>> labels(m, std::vector<std::size_t>(draws));
    for (std::size_t d = 0; d < draws; ++d) {
      const Encoding e = encode(code, m1, uniform_index(rng, code.bins()), rng);
      for (std::size_t i = 0; i < m; ++i) {
        auto [it, inserted] = ids[i].emplace(e.words[i], ids[i].size());
        labels[i][d] = it->second;
      }
    }
    rep.p_values[m1] = g_test_independence(labels, rep.g_stats[m1], rep.dof[m1]);
  });
  rep.min_p = *std::min_element(rep.p_values.begin(), rep.p_values.end());
  rep.adjusted_p = std::min(1.0, rep.min_p * static_cast<double>(nm1));
  rep.rejected = rep.adjusted_p < 0.01;
  return rep;
}

}  // namespace rbc::codesim
