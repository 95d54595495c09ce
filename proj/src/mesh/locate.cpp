#include <algorithm>
#include <cmath>

#include "amrdmd/error.hpp"
#include "amrdmd/mesh.hpp"

namespace amrdmd::mesh {

namespace {

bool inside(const std::array<double, 3>& lambda, int dim) {
  for (int k = 0; k <= dim; ++k)
    if (lambda[k] < -kBarycentricTolerance || lambda[k] > 1.0 + kBarycentricTolerance) return false;
  return true;
}

std::string describe(const Point& x) {
  return "(" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")";
}

}  // namespace

std::array<double, 3> barycentric(const SimplicialMesh& mesh, Index e, const Point& x) {
  const Cell& c = mesh.element(e);
  if (mesh.dim() == 1) {
    const double x0 = mesh.node(c[0])[0];
    const double x1 = mesh.node(c[1])[0];
    const double t = (x[0] - x0) / (x1 - x0);
    return {1.0 - t, t, 0.0};
  }
  const Point& a = mesh.node(c[0]);
  const Point& b = mesh.node(c[1]);
  const Point& d = mesh.node(c[2]);
  const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
  const double l1 = ((x[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (x[1] - a[1])) / det;
  const double l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
  return {1.0 - l1 - l2, l1, l2};
}

std::optional<Location> locate_by_scan(const SimplicialMesh& mesh, const Point& x) {
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto lambda = barycentric(mesh, static_cast<Index>(e), x);
    if (inside(lambda, mesh.dim())) return Location{static_cast<Index>(e), lambda};
  }
  return std::nullopt;
}

PointLocator::PointLocator(const SimplicialMesh& mesh) : mesh_(&mesh) {
  box_ = mesh.bounding_box();
  const auto& box = box_;
  double mean_diameter = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) mean_diameter += mesh.diameter(static_cast<Index>(e));
  mean_diameter /= static_cast<double>(std::max<std::size_t>(1, mesh.num_elements()));

  for (int k = 0; k < 2; ++k) {
    const double extent = box[1][k] - box[0][k];
    origin_[k] = box[0][k];
    if (k >= mesh.dim() || extent <= 0.0) {
      bins_[k] = 1;
      cell_size_[k] = std::max(extent, 1.0);
      continue;
    }
    // Cap the grid so pathological meshes do not allocate huge bucket arrays.
    bins_[k] = static_cast<int>(std::clamp(std::ceil(extent / mean_diameter), 1.0, 4096.0));
    cell_size_[k] = extent / bins_[k];
  }
  buckets_.resize(static_cast<std::size_t>(bins_[0]) * bins_[1]);

  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    Point lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
    for (Index v : mesh.element_nodes(static_cast<Index>(e))) {
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], mesh.node(v)[k]);
        hi[k] = std::max(hi[k], mesh.node(v)[k]);
      }
    }
    const double pad = kBarycentricTolerance * mesh.diameter(static_cast<Index>(e)) + 1e-14;
    const auto b0 = bin_of({lo[0] - pad, lo[1] - pad});
    const auto b1 = bin_of({hi[0] + pad, hi[1] + pad});
    for (int j = b0[1]; j <= b1[1]; ++j)
      for (int i = b0[0]; i <= b1[0]; ++i)
        buckets_[static_cast<std::size_t>(j) * bins_[0] + i].push_back(static_cast<Index>(e));
  }
  // Elements were inserted in id order, so every bucket is already sorted.
}

std::array<int, 2> PointLocator::bin_of(const Point& x) const {
  std::array<int, 2> b{};
  for (int k = 0; k < 2; ++k) {
    const double t = std::floor((x[k] - origin_[k]) / cell_size_[k]);
    b[k] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(bins_[k] - 1)));
  }
  return b;
}

std::optional<Location> PointLocator::find(const Point& x) const {
  const auto& box = box_;
  for (int k = 0; k < mesh_->dim(); ++k) {
    const double slack = kBarycentricTolerance * std::max(1.0, box[1][k] - box[0][k]);
    if (x[k] < box[0][k] - slack || x[k] > box[1][k] + slack) return std::nullopt;
  }
  const auto b = bin_of(x);
  for (Index e : buckets_[static_cast<std::size_t>(b[1]) * bins_[0] + b[0]]) {
    const auto lambda = barycentric(*mesh_, e, x);
    if (inside(lambda, mesh_->dim())) return Location{e, lambda};
  }
  return std::nullopt;
}

Location PointLocator::locate(const Point& x) const {
  if (auto hit = find(x)) return *hit;
  fail(ErrorKind::not_found, "point " + describe(x) + " lies outside the mesh");
}

Location locate_point(const SimplicialMesh& mesh, const Point& x) {
  return PointLocator(mesh).locate(x);
}

}  // namespace amrdmd::mesh
