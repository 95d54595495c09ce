#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amrdmd/error.hpp"
#include "amrdmd/linalg.hpp"
#include "amrdmd/rng.hpp"

namespace amrdmd::linalg {

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kJacobiTolerance = 1e-15;

// Extends the zero columns of u (flagged in `filled`) to an orthonormal set
// by Gram-Schmidt against canonical basis vectors.
void complete_orthonormal(std::vector<Vector>& u, const std::vector<bool>& filled) {
  const std::size_t n = u.empty() ? 0 : u.front().size();
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (filled[j]) continue;
    while (candidate < n) {
      Vector e(n, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < u.size(); ++k) {
          if (k == j || (!filled[k] && k > j)) continue;
          const double proj = dot(e, u[k]);
          for (std::size_t i = 0; i < n; ++i) e[i] -= proj * u[k][i];
        }
      }
      const double len = norm2(e);
      if (len > 1e-8) {
        for (auto& v : e) v /= len;
        u[j] = std::move(e);
        break;
      }
    }
  }
}

// One-sided (Hestenes) Jacobi on a matrix with rows >= cols.
SvdResult jacobi_svd(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  std::vector<Vector> w(m, Vector(n));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) w[j][i] = a(i, j);
  std::vector<Vector> v(m, Vector(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) v[j][j] = 1.0;

  bool converged = m < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        const Vector& wp = w[p];
        const Vector& wq = w[q];
        for (std::size_t i = 0; i < n; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = w[p][i];
          const double xq = w[q][i];
          w[p][i] = c * xp - s * xq;
          w[q][i] = s * xp + c * xq;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = v[p][i];
          const double xq = v[q][i];
          v[p][i] = c * xp - s * xq;
          v[q][i] = s * xp + c * xq;
        }
      }
    }
  }
  if (!converged) fail(ErrorKind::numeric, "svd: Jacobi sweeps did not converge");

  Vector sigma(m);
  for (std::size_t j = 0; j < m; ++j) sigma[j] = norm2(w[j]);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double sigma_max = m > 0 ? sigma[order.front()] : 0.0;
  std::vector<Vector> u_cols(m);
  std::vector<bool> filled(m, false);
  SvdResult out{Matrix(n, m), Vector(m), Matrix(m, m)};
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    if (sigma[j] > std::numeric_limits<double>::min() * 16 &&
        sigma[j] > sigma_max * std::numeric_limits<double>::epsilon() * 1e-3) {
      u_cols[k] = w[j];
      for (auto& x : u_cols[k]) x /= sigma[j];
      filled[k] = true;
    } else {
      u_cols[k] = Vector(n, 0.0);
    }
    for (std::size_t i = 0; i < m; ++i) out.v(i, k) = v[j][i];
  }
  complete_orthonormal(u_cols, filled);
  for (std::size_t k = 0; k < m; ++k) out.u.set_column(k, u_cols[k]);
  return out;
}

SvdResult svd_tall(const Matrix& a) {
  // Preconditioning with QR keeps the Jacobi sweeps on a small square matrix.
  if (a.rows() > a.cols() + a.cols() / 2) {
    QrResult qr = householder_qr(a);
    SvdResult inner = jacobi_svd(qr.r);
    return {qr.q * inner.u, std::move(inner.sigma), std::move(inner.v)};
  }
  return jacobi_svd(a);
}

}  // namespace

Matrix SvdResult::reconstruct() const {
  Matrix us = u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= sigma[j];
  return us * v.transpose();
}

SvdResult svd(const Matrix& a) {
  for (double x : a.data())
    if (!std::isfinite(x)) fail(ErrorKind::invalid_argument, "svd: non-finite entry");
  if (a.rows() == 0 || a.cols() == 0) return {Matrix(a.rows(), 0), {}, Matrix(a.cols(), 0)};
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult t = svd_tall(a.transpose());
  return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

SvdResult truncate(const SvdResult& full, std::size_t r) {
  if (r < 1 || r > full.rank())
    fail(ErrorKind::invalid_argument, "truncate: rank " + std::to_string(r) +
                                          " outside [1, " + std::to_string(full.rank()) + "]");
  return {full.u.column_range(0, r), Vector(full.sigma.begin(), full.sigma.begin() + r),
          full.v.column_range(0, r)};
}

double spectral_norm(const Matrix& a) {
  const auto s = svd(a);
  return s.sigma.empty() ? 0.0 : s.sigma.front();
}

SvdResult randomized_svd(const Matrix& a, const RsvdOptions& options) {
  const std::size_t sketch = options.rank + options.oversample;
  if (options.rank < 1 || sketch > std::min(a.rows(), a.cols()))
    fail(ErrorKind::invalid_argument,
         "randomized_svd: need 1 <= rank and rank + oversample <= min(rows, cols)");

  // Sketch entries are drawn row-major from a single counter stream.
  CounterRng rng(options.seed);
  Matrix omega(a.cols(), sketch);
  for (double& x : omega.data()) x = rng.next_gaussian();

  Matrix q = householder_qr(a * omega).q;
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    Matrix z = householder_qr(multiply_tn(a, q)).q;
    q = householder_qr(a * z).q;
  }
  Matrix b = multiply_tn(q, a);  // sketch x cols
  SvdResult small = svd(b);
  SvdResult full{q * small.u, std::move(small.sigma), std::move(small.v)};
  return truncate(full, options.rank);
}

}  // namespace amrdmd::linalg
