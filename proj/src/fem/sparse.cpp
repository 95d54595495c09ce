#include <algorithm>
#include <cmath>

#include "amrdmd/error.hpp"
#include "amrdmd/fem.hpp"

namespace amrdmd::fem {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows || t.col < 0 ||
        static_cast<std::size_t>(t.col) >= cols)
      fail(ErrorKind::invalid_argument, "csr: triplet index out of range");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const Triplet& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      m.values_.back() += t.value;
      continue;
    }
    m.col_idx_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.row_ptr_[static_cast<std::size_t>(t.row) + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  return m;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<Index>(j));
  if (it == last || *it != static_cast<Index>(j)) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  require(x.size() == cols_, "csr: vector length mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
  return y;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

std::vector<double> CsrMatrix::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s[i] += values_[k];
  return s;
}

SparseSpd::SparseSpd(CsrMatrix a) : a_(std::move(a)) {
  require(a_.rows() == a_.cols(), "SparseSpd: matrix is not square");
  double scale = 0.0;
  for (double v : a_.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < a_.rows(); ++i) {
    if (!(a_.at(i, i) > 0.0))
      fail(ErrorKind::invalid_argument, "SparseSpd: non-positive diagonal at row " + std::to_string(i));
    for (std::size_t k = a_.row_ptr()[i]; k < a_.row_ptr()[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(a_.col_idx()[k]);
      if (std::abs(a_.values()[k] - a_.at(j, i)) > 1e-12 * scale)
        fail(ErrorKind::invalid_argument, "SparseSpd: matrix is not symmetric at (" +
                                              std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
}

CgResult cg_solve(const SparseSpd& a, std::span<const double> b, double tol, int max_iter) {
  const std::size_t n = a.size();
  require(b.size() == n, "cg_solve: right-hand side length mismatch");
  if (max_iter <= 0) max_iter = static_cast<int>(10 * std::max<std::size_t>(n, 1));

  const auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  const double b_norm = norm(b);
  CgResult out;
  out.x.assign(n, 0.0);
  if (b_norm == 0.0) return out;

  const std::vector<double> diag = a.matrix().diagonal();
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

  double residual = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const std::vector<double> ap = a.multiply(p);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (!(pap > 0.0)) throw SolverError("cg_solve: matrix is not positive definite", residual);
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    residual = norm(r) / b_norm;
    out.iterations = it;
    if (residual <= tol) {
      // Confirm against the true residual; the recurrence can drift.
      const std::vector<double> ax = a.multiply(out.x);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
      residual = std::sqrt(s) / b_norm;
      if (residual <= tol) {
        out.relative_residual = residual;
        return out;
      }
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    }
    double rz_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / diag[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("cg_solve: no convergence in " + std::to_string(max_iter) +
                        " iterations (relative residual " + std::to_string(residual) + ")",
                    residual);
}

}  // namespace amrdmd::fem
