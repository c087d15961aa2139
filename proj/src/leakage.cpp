#include "rbc/codesim.hpp"

#include "rbc/error.hpp"
#include "rbc/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace rbc::codesim {

namespace {

constexpr double kMaxTableEntries = 33554432.0;  // 2^25 doubles per table
constexpr double kMaxWork = 1e12;

void check_entries(double entries, const std::string& what) {
  if (entries > kMaxTableEntries) throw SizeGuardError(what + " table exceeds 2^25 entries");
}

double entropy(const Eigen::Ref<const Eigen::ArrayXXd>& p) {
  return -(p * p.max(1e-300).log()).sum();
}

// T(o, m1 * A + a) = P(output block o | cloud a, m1), averaged over satellites.
Eigen::MatrixXd output_table(const ToyCode& code, std::size_t i, const Eigen::MatrixXd& w) {
  const std::size_t n = code.config().n;
  const auto no = static_cast<std::size_t>(w.cols());
  std::size_t rows = 1;
  for (std::size_t t = 0; t < n; ++t) rows *= no;
  const std::size_t na = code.clouds(i), nm1 = code.m1_count(), nl = code.satellites(i);
  check_entries(static_cast<double>(rows) * static_cast<double>(na * nm1), "output");
  Eigen::MatrixXd table(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(na * nm1));
  parallel_for(na * nm1, [&](std::size_t col) {
    const std::size_t m1 = col / na, a = col % na;
    Eigen::VectorXd cur(static_cast<Eigen::Index>(rows)), next(static_cast<Eigen::Index>(rows));
    auto acc = table.col(static_cast<Eigen::Index>(col));
    acc.setZero();
    for (std::size_t l = 0; l < nl; ++l) {
      const std::uint8_t* x = code.satellite(i, a, m1, l);
      cur[0] = 1.0;
      std::size_t len = 1;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < len; ++j)
          for (std::size_t o = 0; o < no; ++o)
            next[static_cast<Eigen::Index>(j * no + o)] = cur[static_cast<Eigen::Index>(j)] * w(x[t], static_cast<Eigen::Index>(o));
        len *= no;
        std::swap(cur, next);
      }
      acc += cur;
    }
    acc /= static_cast<double>(nl);
  });
  return table;
}

// Row-wise Kronecker products of per-m1 columns: rows (o_0, .., o_j), o_0 most significant.
Eigen::MatrixXd combine_columns(const Eigen::MatrixXd& left, const Eigen::MatrixXd& v) {
  check_entries(static_cast<double>(left.rows()) * static_cast<double>(v.rows()) * static_cast<double>(left.cols()),
                "combined");
  Eigen::MatrixXd out(left.rows() * v.rows(), left.cols());
  for (Eigen::Index r = 0; r < left.rows(); ++r)
    for (Eigen::Index o = 0; o < v.rows(); ++o)
      out.row(r * v.rows() + o) = left.row(r).cwiseProduct(v.row(o));
  return out;
}

double m1_leakage(const ToyCode& code, const std::vector<Eigen::MatrixXd>& tables) {
  const std::size_t m = code.subchannels();
  const auto nm1 = static_cast<Eigen::Index>(code.m1_count());
  std::vector<Eigen::MatrixXd> v(m);
  double h_cond = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto na = static_cast<Eigen::Index>(code.clouds(i));
    v[i] = Eigen::MatrixXd::Zero(tables[i].rows(), nm1);
    for (Eigen::Index m1 = 0; m1 < nm1; ++m1) {
      for (Eigen::Index a = 0; a < na; ++a) v[i].col(m1) += tables[i].col(m1 * na + a);
      v[i].col(m1) /= static_cast<double>(na);
      h_cond += entropy(v[i].col(m1).array()) / static_cast<double>(nm1);
    }
  }
  Eigen::MatrixXd left = Eigen::MatrixXd::Ones(1, nm1);
  for (std::size_t i = 0; i + 1 < m; ++i) left = combine_columns(left, v[i]);
  const Eigen::MatrixXd& right = v[m - 1];
  if (static_cast<double>(left.rows()) * static_cast<double>(right.rows()) * static_cast<double>(nm1) > kMaxWork)
    throw SizeGuardError("message 1 leakage enumeration is too large");

  const Eigen::Index chunk = std::max<Eigen::Index>(1, 4194304 / std::max<Eigen::Index>(1, left.rows()));
  const auto chunks = static_cast<std::size_t>((right.rows() + chunk - 1) / chunk);
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    const Eigen::Index start = static_cast<Eigen::Index>(c) * chunk;
    const Eigen::Index len = std::min(chunk, right.rows() - start);
    const Eigen::MatrixXd p = left * right.middleRows(start, len).transpose() / static_cast<double>(nm1);
    partial[c] = entropy(p.array());
  });
  double h = 0.0;
  for (double x : partial) h += x;
  return std::max(0.0, h - h_cond);
}

double m2_leakage(const ToyCode& code, const std::vector<Eigen::MatrixXd>& tables) {
  const std::size_t m = code.subchannels();
  const std::size_t nbins = code.bins();
  if (nbins == 1) return 0.0;
  const auto nm1 = static_cast<Eigen::Index>(code.m1_count());

  // Left rows (a_L, y_L) with index a_L * |Y_L| + y_L.
  Eigen::MatrixXd left = Eigen::MatrixXd::Ones(1, nm1);
  Eigen::Index yl = 1, al = 1;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const auto na = static_cast<Eigen::Index>(code.clouds(i));
    const Eigen::Index ny = tables[i].rows();
    check_entries(static_cast<double>(yl * ny) * static_cast<double>(al * na) * static_cast<double>(nm1), "left");
    Eigen::MatrixXd next(yl * ny * al * na, nm1);
    for (Eigen::Index y = 0; y < yl; ++y)
      for (Eigen::Index yi = 0; yi < ny; ++yi)
        for (Eigen::Index a = 0; a < al; ++a)
          for (Eigen::Index ai = 0; ai < na; ++ai) {
            const Eigen::Index row = (a * na + ai) * (yl * ny) + y * ny + yi;
            for (Eigen::Index m1 = 0; m1 < nm1; ++m1)
              next(row, m1) = left(a * yl + y, m1) * tables[i](yi, m1 * na + ai);
          }
    left = std::move(next);
    yl *= ny;
    al *= na;
  }
  const Eigen::MatrixXd& right = tables[m - 1];
  const auto ar = static_cast<Eigen::Index>(code.clouds(m - 1));
  const Eigen::Index yr = right.rows();
  const double scale = 1.0 / (static_cast<double>(code.bin_size()) * static_cast<double>(nm1));
  const double outputs = static_cast<double>(yl) * static_cast<double>(yr);
  const double direct_work = outputs * static_cast<double>(nm1 * al) * static_cast<double>(ar) +
                             outputs * static_cast<double>(code.tuples());
  const double folded_work = outputs * static_cast<double>(nm1 * al) * static_cast<double>(nbins);
  if (std::min(direct_work, folded_work) > kMaxWork)
    throw SizeGuardError("message 2 leakage enumeration is too large");

  std::vector<double> h_y, h_cond;
  auto accumulate = [&](std::size_t c, const Eigen::MatrixXd& pb) {
    const Eigen::ArrayXd py = pb.rowwise().sum().array() / static_cast<double>(nbins);
    h_y[c] += entropy(py);
    h_cond[c] += entropy(pb.array());
  };

  if (folded_work < direct_work) {
    // Sum the right factor over each bin first:
    // Q(m1 * A_L + a_L, (y_R, b)) = sum over a_R with (a_L, a_R) in b of T_R(y_R, m1, a_R).
    Eigen::MatrixXd lmat(yl, nm1 * al);
    for (Eigen::Index m1 = 0; m1 < nm1; ++m1)
      for (Eigen::Index a = 0; a < al; ++a) lmat.col(m1 * al + a) = left.col(m1).segment(a * yl, yl);
    const auto nb = static_cast<Eigen::Index>(nbins);
    const Eigen::Index chunk = std::max<Eigen::Index>(1, 4194304 / std::max<Eigen::Index>(1, yl * nb));
    const auto chunks = static_cast<std::size_t>((yr + chunk - 1) / chunk);
    h_y.assign(chunks, 0.0);
    h_cond.assign(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t c) {
      const Eigen::Index start = static_cast<Eigen::Index>(c) * chunk;
      const Eigen::Index len = std::min(chunk, yr - start);
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nm1 * al, len * nb);
      for (std::size_t t = 0; t < code.tuples(); ++t) {
        const auto tt = static_cast<Eigen::Index>(t);
        const Eigen::Index a_l = tt / ar, a_r = tt % ar;
        const auto b = static_cast<Eigen::Index>(code.bin_of(t));
        for (Eigen::Index j = 0; j < len; ++j)
          for (Eigen::Index m1 = 0; m1 < nm1; ++m1) q(m1 * al + a_l, j * nb + b) += right(start + j, m1 * ar + a_r);
      }
      const Eigen::MatrixXd pb_all = scale * (lmat * q);
      for (Eigen::Index j = 0; j < len; ++j) accumulate(c, pb_all.middleCols(j * nb, nb));
    });
  } else {
    // Members as columns a_R * A_L + a_L of each reshaped output slice.
    const Eigen::Index nt = al * ar;
    std::vector<std::vector<Eigen::Index>> members(nbins);
    for (std::size_t b = 0; b < nbins; ++b)
      for (std::uint32_t t : code.bin_members(b)) {
        const auto tt = static_cast<Eigen::Index>(t);
        members[b].push_back((tt % ar) * al + tt / ar);
      }
    const Eigen::Index chunk = std::max<Eigen::Index>(1, 4194304 / std::max<Eigen::Index>(1, left.rows() * ar));
    const auto chunks = static_cast<std::size_t>((yr + chunk - 1) / chunk);
    h_y.assign(chunks, 0.0);
    h_cond.assign(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t c) {
      const Eigen::Index start = static_cast<Eigen::Index>(c) * chunk;
      const Eigen::Index len = std::min(chunk, yr - start);
      Eigen::MatrixXd g(nm1, len * ar);
      for (Eigen::Index j = 0; j < len; ++j)
        for (Eigen::Index m1 = 0; m1 < nm1; ++m1)
          for (Eigen::Index a = 0; a < ar; ++a) g(m1, j * ar + a) = right(start + j, m1 * ar + a);
      const Eigen::MatrixXd h = left * g;
      Eigen::MatrixXd pb(yl, static_cast<Eigen::Index>(nbins));
      for (Eigen::Index j = 0; j < len; ++j) {
        const Eigen::Map<const Eigen::MatrixXd> slice(h.col(j * ar).data(), yl, nt);
        if (code.bin_size() == 1) {
          // Entropies do not depend on the column order.
          accumulate(c, scale * slice);
          continue;
        }
        pb.setZero();
        for (std::size_t b = 0; b < nbins; ++b)
          for (Eigen::Index col : members[b]) pb.col(static_cast<Eigen::Index>(b)) += slice.col(col);
        pb *= scale;
        accumulate(c, pb);
      }
    });
  }
  double hy = 0.0, hc = 0.0;
  for (std::size_t c = 0; c < h_y.size(); ++c) {
    hy += h_y[c];
    hc += h_cond[c];
  }
  return std::max(0.0, hy - hc / static_cast<double>(nbins));
}

}  // namespace

Leakage exact_leakage(const ToyCode& code) {
  const DegradedDMC& ch = code.channel();
  const std::size_t m = code.subchannels();
  const double n = static_cast<double>(code.config().n);
  Leakage out;
  std::vector<Eigen::MatrixXd> tables(m);
  for (std::size_t i = 0; i < m; ++i) tables[i] = output_table(code, i, ch.group2_matrix(i));
  out.m1_z = m1_leakage(code, tables) / n;
  for (std::size_t k = 0; k < ch.receivers(); ++k) {
    for (std::size_t i = 0; i < m; ++i) tables[i] = output_table(code, i, ch.receiver_matrix(i, k));
    out.m2_y.push_back(m2_leakage(code, tables) / n);
  }
  return out;
}

}  // namespace rbc::codesim
