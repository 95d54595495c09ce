#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace amrdmd::linalg {

using Complex = std::complex<double>;
using Vector = std::vector<double>;
using CVector = std::vector<Complex>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::size_t rows, std::size_t cols, std::span<const double> values);
  static Matrix from_columns(const std::vector<Vector>& columns);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  // Columns [first, last).
  Matrix column_range(std::size_t first, std::size_t last) const;
  Matrix transpose() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols, Complex fill = {})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  explicit CMatrix(const Matrix& real);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  Complex operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  CVector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const Complex> values);

  std::span<const Complex> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CVector data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CVector operator*(const CMatrix& a, std::span<const Complex> x);

// a^T b without forming the transpose.
Matrix multiply_tn(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
double norm2(std::span<const Complex> x);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// Thin SVD, k = min(rows, cols): A = U diag(sigma) V^T with U rows x k,
// V cols x k and sigma nonincreasing.
struct SvdResult {
  Matrix u;
  Vector sigma;
  Matrix v;

  std::size_t rank() const { return sigma.size(); }
  Matrix reconstruct() const;
};

SvdResult svd(const Matrix& a);
SvdResult truncate(const SvdResult& full, std::size_t r);
double spectral_norm(const Matrix& a);

struct RsvdOptions {
  std::size_t rank = 1;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
};

SvdResult randomized_svd(const Matrix& a, const RsvdOptions& options);

// Thin Householder QR, rows >= cols. q is rows x cols with orthonormal columns.
struct QrResult {
  Matrix q;
  Matrix r;
};

QrResult householder_qr(const Matrix& a);

// Column-pivoted QR; returns |R_ii| in pivot order.
std::vector<double> pivoted_qr_diagonal(const Matrix& a);
std::size_t numerical_rank(const Matrix& a, double relative_threshold = 1e-10);

struct EigResult {
  CVector values;
  CMatrix vectors;  // column j pairs with values[j], unit 2-norm
};

// Real nonsymmetric eigensolver: balancing, Hessenberg reduction,
// Francis double-shift QR, back-substitution for eigenvectors.
// Ordered by nonincreasing |lambda|; ties put nonnegative imaginary part first.
EigResult eig(const Matrix& a);

// Minimum-norm least-squares solution of B x = y. Singular values below
// rcond * sigma_max are treated as zero.
CVector pinv_apply(const CMatrix& b, std::span<const Complex> y, double rcond = 1e-12);

}  // namespace amrdmd::linalg
