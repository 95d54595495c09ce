#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "amrdmd/mesh.hpp"

namespace amrdmd::fem {

using mesh::Index;
using mesh::Point;
using mesh::SimplicialMesh;
using MeshPtr = std::shared_ptr<const SimplicialMesh>;

// P1 nodal field bound to a mesh.
struct FeField {
  MeshPtr mesh;
  std::vector<double> values;
  std::string name;

  // Throws invalid-argument on a missing mesh, wrong length or non-finite value.
  void check() const;
};

FeField make_field(MeshPtr mesh, std::vector<double> values, std::string name = "u");

// Points in barycentric coordinates; weights sum to the reference simplex
// measure (1 for the unit segment, 1/2 for the unit triangle).
struct QuadratureRule {
  int dim = 1;
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  double reference_measure() const { return dim == 1 ? 1.0 : 0.5; }
};

// Cheapest built-in rule exact to at least `degree`. 1D Gauss up to degree 7,
// 2D up to degree 5.
QuadratureRule quadrature(int dim, int degree);

struct Triplet {
  Index row;
  Index col;
  double value;
};

class CsrMatrix {
 public:
  CsrMatrix() = default;
  // Duplicate (row, col) entries are summed; columns sorted within each row.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  // Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  std::vector<double> row_sums() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

// Square CSR matrix checked for symmetry and a positive diagonal.
class SparseSpd {
 public:
  explicit SparseSpd(CsrMatrix a);
  const CsrMatrix& matrix() const { return a_; }
  std::size_t size() const { return a_.rows(); }
  std::vector<double> multiply(std::span<const double> x) const { return a_.multiply(x); }

 private:
  CsrMatrix a_;
};

SparseSpd assemble_mass(const SimplicialMesh& mesh);

// Element mass matrix by quadrature of degree 2 (exact for P1 products).
std::array<std::array<double, 3>, 3> element_mass(const SimplicialMesh& mesh, Index e);

// P1 shape function values at barycentric point lambda are lambda itself;
// gradients are constant per element.
std::array<Point, 3> shape_gradients(const SimplicialMesh& mesh, Index e);

// Maps a barycentric point of element e to physical coordinates.
Point to_physical(const SimplicialMesh& mesh, Index e, const std::array<double, 3>& lambda);

double evaluate(const FeField& field, const Point& x);
double evaluate(const FeField& field, const mesh::PointLocator& locator, const Point& x);

double integrate(const FeField& field);
double l2_norm(const FeField& field);
double inf_norm(const FeField& field);

// Per-element sqrt(sum over interior facets of h_f * jump^2 * |f|), where the
// jump is in the normal derivative. 1D: |f| = 1 and h_f is the mean length of
// the two neighbours; 2D: h_f = |f| is the edge length.
std::vector<double> flux_jump_indicator(const FeField& field);

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients. max_iter <= 0 means 10 n.
CgResult cg_solve(const SparseSpd& a, std::span<const double> b, double tol = 1e-12, int max_iter = 0);

// A set of named nodal columns sharing one node count.
struct FieldTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t num_nodes() const { return columns.empty() ? 0 : columns.front().size(); }
  // Column by name; throws invalid-argument if absent.
  const std::vector<double>& column(const std::string& name) const;
};

void write_fields(const std::filesystem::path& path, const FieldTable& table);
FieldTable read_fields(const std::filesystem::path& path);

}  // namespace amrdmd::fem
