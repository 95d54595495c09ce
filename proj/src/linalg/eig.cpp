#include <algorithm>
#include <cmath>
#include <numeric>

#include "amrdmd/error.hpp"
#include "amrdmd/linalg.hpp"

namespace amrdmd::linalg {

namespace {

constexpr int kMaxIterationsPerEigenvalue = 100;

using Square = std::vector<Vector>;  // row-indexed

// Parlett-Reinsch balancing with radix 2; returns D such that D^-1 A D is balanced.
Vector balance(Square& a) {
  const std::size_t n = a.size();
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  Vector scale(n, 1.0);
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a[j][i]);
        r += std::abs(a[i][j]);
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        scale[i] *= f;
        for (std::size_t j = 0; j < n; ++j) a[i][j] *= g;
        for (std::size_t j = 0; j < n; ++j) a[j][i] *= f;
      }
    }
  }
  return scale;
}

// Householder reduction to upper Hessenberg form, accumulating V.
void reduce_hessenberg(Square& h, Square& v) {
  const int n = static_cast<int>(h.size());
  const int low = 0;
  const int high = n - 1;
  Vector ort(n, 0.0);
  for (int m = low + 1; m <= high - 1; ++m) {
    double scale = 0.0;
    for (int i = m; i <= high; ++i) scale += std::abs(h[i][m - 1]);
    if (scale == 0.0) continue;
    double hh = 0.0;
    for (int i = high; i >= m; --i) {
      ort[i] = h[i][m - 1] / scale;
      hh += ort[i] * ort[i];
    }
    double g = std::sqrt(hh);
    if (ort[m] > 0) g = -g;
    hh -= ort[m] * g;
    ort[m] -= g;
    for (int j = m; j < n; ++j) {
      double f = 0.0;
      for (int i = high; i >= m; --i) f += ort[i] * h[i][j];
      f /= hh;
      for (int i = m; i <= high; ++i) h[i][j] -= f * ort[i];
    }
    for (int i = 0; i <= high; ++i) {
      double f = 0.0;
      for (int j = high; j >= m; --j) f += ort[j] * h[i][j];
      f /= hh;
      for (int j = m; j <= high; ++j) h[i][j] -= f * ort[j];
    }
    ort[m] = scale * ort[m];
    h[m][m - 1] = scale * g;
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[i][j] = (i == j ? 1.0 : 0.0);
  for (int m = high - 1; m >= low + 1; --m) {
    if (h[m][m - 1] == 0.0) continue;
    for (int i = m + 1; i <= high; ++i) ort[i] = h[i][m - 1];
    for (int j = m; j <= high; ++j) {
      double g = 0.0;
      for (int i = m; i <= high; ++i) g += ort[i] * v[i][j];
      g = (g / ort[m]) / h[m][m - 1];
      for (int i = m; i <= high; ++i) v[i][j] += g * ort[i];
    }
  }
}

Complex cdiv(double xr, double xi, double yr, double yi) {
  if (std::abs(yr) > std::abs(yi)) {
    const double r = yi / yr;
    const double d = yr + r * yi;
    return {(xr + r * xi) / d, (xi - r * xr) / d};
  }
  const double r = yr / yi;
  const double d = yi + r * yr;
  return {(r * xr + xi) / d, (r * xi - xr) / d};
}

// Francis double-shift QR on the Hessenberg matrix, then back-substitution
// for the eigenvectors of the quasi-triangular Schur form (EISPACK hqr2).
// On return d + i e are the eigenvalues; for a complex pair at (j, j+1)
// with e[j] > 0 the eigenvector is V[:, j] + i V[:, j+1].
void schur_and_vectors(Square& h, Square& v, Vector& d, Vector& e) {
  const int nn = static_cast<int>(h.size());
  int n = nn - 1;
  const int low = 0;
  const int high = nn - 1;
  const double eps = std::ldexp(1.0, -52);
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, t, w, x, y;

  double norm = 0.0;
  for (int i = 0; i < nn; ++i)
    for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(h[i][j]);

  int iter = 0;
  while (n >= low) {
    int l = n;
    while (l > low) {
      s = std::abs(h[l - 1][l - 1]) + std::abs(h[l][l]);
      if (s == 0.0) s = norm;
      if (std::abs(h[l][l - 1]) < eps * s) break;
      --l;
    }

    if (l == n) {
      h[n][n] += exshift;
      d[n] = h[n][n];
      e[n] = 0.0;
      --n;
      iter = 0;
    } else if (l == n - 1) {
      w = h[n][n - 1] * h[n - 1][n];
      p = (h[n - 1][n - 1] - h[n][n]) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h[n][n] += exshift;
      h[n - 1][n - 1] += exshift;
      x = h[n][n];
      if (q >= 0) {
        z = (p >= 0) ? p + z : p - z;
        d[n - 1] = x + z;
        d[n] = d[n - 1];
        if (z != 0.0) d[n] = x - w / z;
        e[n - 1] = 0.0;
        e[n] = 0.0;
        x = h[n][n - 1];
        s = std::abs(x) + std::abs(z);
        p = x / s;
        q = z / s;
        r = std::sqrt(p * p + q * q);
        p /= r;
        q /= r;
        for (int j = n - 1; j < nn; ++j) {
          z = h[n - 1][j];
          h[n - 1][j] = q * z + p * h[n][j];
          h[n][j] = q * h[n][j] - p * z;
        }
        for (int i = 0; i <= n; ++i) {
          z = h[i][n - 1];
          h[i][n - 1] = q * z + p * h[i][n];
          h[i][n] = q * h[i][n] - p * z;
        }
        for (int i = low; i <= high; ++i) {
          z = v[i][n - 1];
          v[i][n - 1] = q * z + p * v[i][n];
          v[i][n] = q * v[i][n] - p * z;
        }
      } else {
        d[n - 1] = x + p;
        d[n] = x + p;
        e[n - 1] = z;
        e[n] = -z;
      }
      n -= 2;
      iter = 0;
    } else {
      x = h[n][n];
      y = 0.0;
      w = 0.0;
      if (l < n) {
        y = h[n - 1][n - 1];
        w = h[n][n - 1] * h[n - 1][n];
      }
      // Exceptional shifts
      if (iter == 10) {
        exshift += x;
        for (int i = low; i <= n; ++i) h[i][i] -= x;
        s = std::abs(h[n][n - 1]) + std::abs(h[n - 1][n - 2]);
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (iter == 30) {
        s = (y - x) / 2.0;
        s = s * s + w;
        if (s > 0) {
          s = std::sqrt(s);
          if (y < x) s = -s;
          s = x - w / ((y - x) / 2.0 + s);
          for (int i = low; i <= n; ++i) h[i][i] -= s;
          exshift += s;
          x = y = w = 0.964;
        }
      }
      if (++iter > kMaxIterationsPerEigenvalue)
        fail(ErrorKind::numeric, "eig: QR iteration cap exceeded");

      int m = n - 2;
      while (m >= l) {
        z = h[m][m];
        r = x - z;
        s = y - z;
        p = (r * s - w) / h[m + 1][m] + h[m][m + 1];
        q = h[m + 1][m + 1] - z - r - s;
        r = h[m + 2][m + 1];
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        if (std::abs(h[m][m - 1]) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) * (std::abs(h[m - 1][m - 1]) + std::abs(z) + std::abs(h[m + 1][m + 1]))))
          break;
        --m;
      }
      for (int i = m + 2; i <= n; ++i) {
        h[i][i - 2] = 0.0;
        if (i > m + 2) h[i][i - 3] = 0.0;
      }

      for (int k = m; k <= n - 1; ++k) {
        const bool notlast = (k != n - 1);
        if (k != m) {
          p = h[k][k - 1];
          q = h[k + 1][k - 1];
          r = notlast ? h[k + 2][k - 1] : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s == 0) continue;
        if (k != m)
          h[k][k - 1] = -s * x;
        else if (l != m)
          h[k][k - 1] = -h[k][k - 1];
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;
        for (int j = k; j < nn; ++j) {
          p = h[k][j] + q * h[k + 1][j];
          if (notlast) {
            p += r * h[k + 2][j];
            h[k + 2][j] -= p * z;
          }
          h[k][j] -= p * x;
          h[k + 1][j] -= p * y;
        }
        for (int i = 0; i <= std::min(n, k + 3); ++i) {
          p = x * h[i][k] + y * h[i][k + 1];
          if (notlast) {
            p += z * h[i][k + 2];
            h[i][k + 2] -= p * r;
          }
          h[i][k] -= p;
          h[i][k + 1] -= p * q;
        }
        for (int i = low; i <= high; ++i) {
          p = x * v[i][k] + y * v[i][k + 1];
          if (notlast) {
            p += z * v[i][k + 2];
            v[i][k + 2] -= p * r;
          }
          v[i][k] -= p;
          v[i][k + 1] -= p * q;
        }
      }
    }
  }

  if (norm == 0.0) return;

  for (n = nn - 1; n >= 0; --n) {
    p = d[n];
    q = e[n];
    if (q == 0) {
      int l = n;
      h[n][n] = 1.0;
      for (int i = n - 1; i >= 0; --i) {
        w = h[i][i] - p;
        r = 0.0;
        for (int j = l; j <= n; ++j) r += h[i][j] * h[j][n];
        if (e[i] < 0.0) {
          z = w;
          s = r;
        } else {
          l = i;
          if (e[i] == 0.0) {
            h[i][n] = (w != 0.0) ? -r / w : -r / (eps * norm);
          } else {
            x = h[i][i + 1];
            y = h[i + 1][i];
            q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
            t = (x * s - z * r) / q;
            h[i][n] = t;
            h[i + 1][n] = (std::abs(x) > std::abs(z)) ? (-r - w * t) / x : (-s - y * t) / z;
          }
          t = std::abs(h[i][n]);
          if ((eps * t) * t > 1)
            for (int j = i; j <= n; ++j) h[j][n] /= t;
        }
      }
    } else if (q < 0) {
      int l = n - 1;
      if (std::abs(h[n][n - 1]) > std::abs(h[n - 1][n])) {
        h[n - 1][n - 1] = q / h[n][n - 1];
        h[n - 1][n] = -(h[n][n] - p) / h[n][n - 1];
      } else {
        const Complex c = cdiv(0.0, -h[n - 1][n], h[n - 1][n - 1] - p, q);
        h[n - 1][n - 1] = c.real();
        h[n - 1][n] = c.imag();
      }
      h[n][n - 1] = 0.0;
      h[n][n] = 1.0;
      for (int i = n - 2; i >= 0; --i) {
        double ra = 0.0, sa = 0.0;
        for (int j = l; j <= n; ++j) {
          ra += h[i][j] * h[j][n - 1];
          sa += h[i][j] * h[j][n];
        }
        w = h[i][i] - p;
        if (e[i] < 0.0) {
          z = w;
          r = ra;
          s = sa;
        } else {
          l = i;
          if (e[i] == 0) {
            const Complex c = cdiv(-ra, -sa, w, q);
            h[i][n - 1] = c.real();
            h[i][n] = c.imag();
          } else {
            x = h[i][i + 1];
            y = h[i + 1][i];
            double vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
            const double vi = (d[i] - p) * 2.0 * q;
            if (vr == 0.0 && vi == 0.0)
              vr = eps * norm * (std::abs(w) + std::abs(q) + std::abs(x) + std::abs(y) + std::abs(z));
            const Complex c = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
            h[i][n - 1] = c.real();
            h[i][n] = c.imag();
            if (std::abs(x) > (std::abs(z) + std::abs(q))) {
              h[i + 1][n - 1] = (-ra - w * h[i][n - 1] + q * h[i][n]) / x;
              h[i + 1][n] = (-sa - w * h[i][n] - q * h[i][n - 1]) / x;
            } else {
              const Complex c2 = cdiv(-r - y * h[i][n - 1], -s - y * h[i][n], z, q);
              h[i + 1][n - 1] = c2.real();
              h[i + 1][n] = c2.imag();
            }
          }
          t = std::max(std::abs(h[i][n - 1]), std::abs(h[i][n]));
          if ((eps * t) * t > 1)
            for (int j = i; j <= n; ++j) {
              h[j][n - 1] /= t;
              h[j][n] /= t;
            }
        }
      }
    }
  }

  for (int j = nn - 1; j >= low; --j)
    for (int i = low; i <= high; ++i) {
      z = 0.0;
      for (int k = low; k <= std::min(j, high); ++k) z += v[i][k] * h[k][j];
      v[i][j] = z;
    }
}

// Unit 2-norm, largest-magnitude component rotated onto the positive real axis.
void normalize(CVector& w) {
  const double len = norm2(w);
  if (len == 0.0) return;
  std::size_t pivot = 0;
  for (std::size_t i = 1; i < w.size(); ++i)
    if (std::abs(w[i]) > std::abs(w[pivot]) * (1.0 + 1e-12)) pivot = i;
  const Complex phase = std::abs(w[pivot]) > 0 ? std::conj(w[pivot]) / std::abs(w[pivot]) : 1.0;
  for (auto& x : w) x = x * phase / len;
  w[pivot] = std::abs(w[pivot]);
}

}  // namespace

EigResult eig(const Matrix& a) {
  require(a.rows() == a.cols(), "eig: matrix must be square");
  for (double x : a.data())
    if (!std::isfinite(x)) fail(ErrorKind::invalid_argument, "eig: non-finite entry");
  const std::size_t n = a.rows();
  if (n == 0) return {};

  Square h(n, Vector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h[i][j] = a(i, j);
  const Vector scale = balance(h);
  Square v(n, Vector(n, 0.0));
  reduce_hessenberg(h, v);
  Vector d(n, 0.0), e(n, 0.0);
  schur_and_vectors(h, v, d, e);

  CVector values(n);
  std::vector<CVector> vectors(n, CVector(n));
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = {d[j], e[j]};
    if (e[j] == 0.0) {
      for (std::size_t i = 0; i < n; ++i) vectors[j][i] = scale[i] * v[i][j];
      normalize(vectors[j]);
    } else if (e[j] > 0.0) {
      for (std::size_t i = 0; i < n; ++i)
        vectors[j][i] = scale[i] * Complex(v[i][j], v[i][j + 1]);
      normalize(vectors[j]);
      values[j + 1] = std::conj(values[j]);
      for (std::size_t i = 0; i < n; ++i) vectors[j + 1][i] = std::conj(vectors[j][i]);
      ++j;
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double ax = std::abs(values[x]);
    const double ay = std::abs(values[y]);
    if (ax != ay) return ax > ay;
    if (values[x].imag() != values[y].imag()) return values[x].imag() > values[y].imag();
    return values[x].real() > values[y].real();
  });

  EigResult out{CVector(n), CMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = values[order[k]];
    out.vectors.set_column(k, vectors[order[k]]);
  }
  return out;
}

CVector pinv_apply(const CMatrix& b, std::span<const Complex> y, double rcond) {
  const std::size_t m = b.rows();
  const std::size_t n = b.cols();
  require(m >= 1, "pinv_apply: empty matrix");
  require(y.size() == m, "pinv_apply: right-hand side length mismatch");

  // Real embedding [[Re, -Im], [Im, Re]] commutes with the pseudoinverse.
  Matrix real(2 * m, 2 * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Complex z = b(i, j);
      real(i, j) = z.real();
      real(i, j + n) = -z.imag();
      real(i + m, j) = z.imag();
      real(i + m, j + n) = z.real();
    }
  Vector rhs(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    rhs[i] = y[i].real();
    rhs[i + m] = y[i].imag();
  }

  const SvdResult s = svd(real);
  const double cutoff = s.sigma.empty() ? 0.0 : rcond * s.sigma.front();
  Vector coeff(s.rank(), 0.0);
  for (std::size_t k = 0; k < s.rank(); ++k) {
    if (s.sigma[k] <= cutoff || s.sigma[k] == 0.0) continue;
    double proj = 0.0;
    for (std::size_t i = 0; i < 2 * m; ++i) proj += s.u(i, k) * rhs[i];
    coeff[k] = proj / s.sigma[k];
  }
  Vector x(2 * n, 0.0);
  for (std::size_t i = 0; i < 2 * n; ++i)
    for (std::size_t k = 0; k < s.rank(); ++k) x[i] += s.v(i, k) * coeff[k];

  CVector out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = {x[j], x[j + n]};
  return out;
}

}  // namespace amrdmd::linalg
