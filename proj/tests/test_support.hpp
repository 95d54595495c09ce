#pragma once

// Shared helpers and independent oracles for the test suites. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "amrdmd/linalg.hpp"
#include "amrdmd/rng.hpp"

namespace amrdmd::testing {

inline linalg::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  CounterRng rng(seed);
  linalg::Matrix a(rows, cols);
  for (double& x : a.data()) x = rng.next_gaussian();
  return a;
}

// Exact-rank matrix as a product of Gaussian factors.
inline linalg::Matrix random_low_rank(std::size_t rows, std::size_t cols, std::size_t rank,
                                      std::uint64_t seed) {
  return random_matrix(rows, rank, seed) * random_matrix(rank, cols, seed + 7919);
}

// Determinant via Gaussian elimination with partial pivoting.
inline double lu_determinant(linalg::Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0) return 0.0;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

// Dense solve with partial pivoting (real).
inline std::vector<double> dense_solve(linalg::Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_iteration_max(const linalg::Matrix& s, int iterations = 5000) {
  std::vector<double> x(s.rows(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> y = s * x;
    double len = 0.0;
    for (double v : y) len += v * v;
    len = std::sqrt(len);
    if (len == 0.0) return 0.0;
    for (auto& v : y) v /= len;
    lambda = len;
    x = std::move(y);
  }
  return lambda;
}

// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations,
// sorted descending.
inline std::vector<double> symmetric_eigenvalues(linalg::Matrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

inline double uniform(CounterRng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_uniform();
}

}  // namespace amrdmd::testing
