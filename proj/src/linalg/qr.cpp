#include <algorithm>
#include <cmath>
#include <numeric>

#include "amrdmd/error.hpp"
#include "amrdmd/linalg.hpp"

namespace amrdmd::linalg {

namespace {

// Householder vector for x[start..]: returns beta with H = I - beta v v^T,
// v[start] = 1 implied, and overwrites x[start] with the resulting alpha.
struct Reflector {
  Vector v;
  double beta = 0.0;
  double alpha = 0.0;
};

Reflector make_reflector(std::span<const double> x) {
  Reflector h;
  h.v.assign(x.begin(), x.end());
  const double norm_x = norm2(x);
  if (norm_x == 0.0) {
    h.v.assign(x.size(), 0.0);
    if (!h.v.empty()) h.v[0] = 1.0;
    return h;
  }
  h.alpha = x[0] > 0.0 ? -norm_x : norm_x;
  h.v[0] -= h.alpha;
  const double vnorm2 = dot(h.v, h.v);
  h.beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
  return h;
}

}  // namespace

QrResult householder_qr(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  require(m >= n, "householder_qr: requires rows >= cols");
  Matrix r = a;
  std::vector<Reflector> reflectors;
  reflectors.reserve(n);
  Vector x;
  for (std::size_t k = 0; k < n; ++k) {
    x.resize(m - k);
    for (std::size_t i = k; i < m; ++i) x[i - k] = r(i, k);
    Reflector h = make_reflector(x);
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += h.v[i - k] * r(i, j);
      s *= h.beta;
      if (s == 0.0) continue;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * h.v[i - k];
    }
    for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
    reflectors.push_back(std::move(h));
  }

  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    const Reflector& h = reflectors[kk];
    if (h.beta == 0.0) continue;
    for (std::size_t j = kk; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < m; ++i) s += h.v[i - kk] * q(i, j);
      s *= h.beta;
      for (std::size_t i = kk; i < m; ++i) q(i, j) -= s * h.v[i - kk];
    }
  }

  Matrix r_square(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) r_square(i, j) = r(i, j);
  return {std::move(q), std::move(r_square)};
}

std::vector<double> pivoted_qr_diagonal(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix r = a;
  const std::size_t steps = std::min(m, n);
  std::vector<double> diag;
  diag.reserve(steps);
  Vector x;
  for (std::size_t k = 0; k < steps; ++k) {
    // Pivot on the largest remaining column norm; norms are recomputed
    // each step rather than downdated, which is exact enough at these sizes.
    std::size_t pivot = k;
    double best = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += r(i, j) * r(i, j);
      if (s > best) {
        best = s;
        pivot = j;
      }
    }
    if (pivot != k)
      for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, pivot));
    x.resize(m - k);
    for (std::size_t i = k; i < m; ++i) x[i - k] = r(i, k);
    Reflector h = make_reflector(x);
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += h.v[i - k] * r(i, j);
      s *= h.beta;
      if (s == 0.0) continue;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * h.v[i - k];
    }
    diag.push_back(std::abs(r(k, k)));
  }
  return diag;
}

std::size_t numerical_rank(const Matrix& a, double relative_threshold) {
  const auto diag = pivoted_qr_diagonal(a);
  if (diag.empty()) return 0;
  const double largest = *std::max_element(diag.begin(), diag.end());
  if (largest == 0.0) return 0;
  return static_cast<std::size_t>(std::count_if(
      diag.begin(), diag.end(), [&](double d) { return d > relative_threshold * largest; }));
}

}  // namespace amrdmd::linalg
