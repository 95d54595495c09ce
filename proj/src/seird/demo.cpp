#include <algorithm>
#include <cmath>
#include <set>

#include "amrdmd/error.hpp"
#include "amrdmd/l2projection.hpp"
#include "amrdmd/rng.hpp"
#include "amrdmd/seird.hpp"

namespace amrdmd::seird {

using mesh::Index;
using mesh::Point;

namespace {

constexpr double kTouch = 1e-12;

// Separating-axis test between a triangle and the closed square [-s, s]^2.
bool meets_square(const std::array<Point, 3>& t, double s) {
  for (int k = 0; k < 2; ++k) {
    const double lo = std::min({t[0][k], t[1][k], t[2][k]});
    const double hi = std::max({t[0][k], t[1][k], t[2][k]});
    if (lo > s + kTouch || hi < -s - kTouch) return false;
  }
  const Point corners[4] = {{-s, -s}, {s, -s}, {s, s}, {-s, s}};
  for (int e = 0; e < 3; ++e) {
    const Point& a = t[e];
    const Point& b = t[(e + 1) % 3];
    const double nx = b[1] - a[1], ny = a[0] - b[0];
    double tlo = HUGE_VAL, thi = -HUGE_VAL, slo = HUGE_VAL, shi = -HUGE_VAL;
    for (const Point& p : t) {
      tlo = std::min(tlo, nx * p[0] + ny * p[1]);
      thi = std::max(thi, nx * p[0] + ny * p[1]);
    }
    for (const Point& p : corners) {
      slo = std::min(slo, nx * p[0] + ny * p[1]);
      shi = std::max(shi, nx * p[0] + ny * p[1]);
    }
    const double scale = std::hypot(nx, ny);
    if (tlo > shi + kTouch * scale || thi < slo - kTouch * scale) return false;
  }
  return true;
}

double indicator(const Point& p) { return std::abs(p[0]) <= 0.3 && std::abs(p[1]) <= 0.3 ? 1.0 : 0.0; }

fem::FeField interpolate_indicator(const MeshPtr& m) {
  std::vector<double> v;
  v.reserve(m->num_nodes());
  for (const auto& p : m->nodes()) v.push_back(indicator(p));
  return fem::make_field(m, std::move(v), "u");
}

// Structured 92x92 triangulation of [-1, 1]^2 with interior nodes moved by up
// to a quarter cell in each direction.
MeshPtr perturbed_mesh(std::uint64_t seed) {
  constexpr int cells = 92;
  const auto base = mesh::build_structured_triangle_mesh({-1, 1}, {-1, 1}, cells, cells);
  const double h = 2.0 / cells;
  CounterRng rng(seed);
  std::vector<Point> nodes = base.nodes();
  for (Point& p : nodes) {
    const double dx = (rng.next_uniform() - 0.5) * 0.5 * h;
    const double dy = (rng.next_uniform() - 0.5) * 0.5 * h;
    if (std::abs(std::abs(p[0]) - 1.0) > 1e-12) p[0] += dx;
    if (std::abs(std::abs(p[1]) - 1.0) > 1e-12) p[1] += dy;
  }
  return std::make_shared<const mesh::SimplicialMesh>(2, std::move(nodes), base.elements());
}

}  // namespace

std::vector<Index> square_transition_elements(const mesh::SimplicialMesh& m, double s) {
  require(m.dim() == 2, "square_transition_elements: needs a 2D mesh");
  std::vector<Index> out;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto& c = m.element(static_cast<Index>(e));
    const std::array<Point, 3> t{m.node(c[0]), m.node(c[1]), m.node(c[2])};
    const bool inside = std::all_of(t.begin(), t.end(), [s](const Point& p) {
      return std::abs(p[0]) < s - kTouch && std::abs(p[1]) < s - kTouch;
    });
    if (!inside && meets_square(t, s)) out.push_back(static_cast<Index>(e));
  }
  return out;
}

IndicatorDemo indicator_projection_demo(std::uint64_t seed) {
  auto adaptive = mesh::build_structured_triangle_mesh({-1, 1}, {-1, 1}, 10, 10);
  for (int round = 0; round < 3; ++round) {
    mesh::RefinementPlan plan;
    const auto flagged = square_transition_elements(adaptive, 0.3);
    plan.refine.insert(flagged.begin(), flagged.end());
    adaptive = mesh::refine(adaptive, plan);
  }
  const auto donor_mesh = std::make_shared<const mesh::SimplicialMesh>(std::move(adaptive));
  // 80x80 cells with alternating diagonals: three uniform quadrisections of the base mesh.
  const auto structured_mesh = std::make_shared<const mesh::SimplicialMesh>(
      mesh::refine_uniformly(mesh::build_structured_triangle_mesh({-1, 1}, {-1, 1}, 10, 10), 3));
  const auto unstructured_mesh = perturbed_mesh(seed);

  IndicatorDemo demo;
  demo.adaptive = interpolate_indicator(donor_mesh);
  demo.structured = l2projection::project(l2projection::build_projection(donor_mesh, structured_mesh), demo.adaptive);
  demo.unstructured =
      l2projection::project(l2projection::build_projection(donor_mesh, unstructured_mesh), demo.adaptive);
  demo.adaptive_inf = fem::inf_norm(demo.adaptive);
  demo.structured_inf = fem::inf_norm(demo.structured);
  demo.unstructured_inf = fem::inf_norm(demo.unstructured);
  return demo;
}

dmd::SnapshotMatrix synth_linear_series(std::span<const linalg::Complex> eigenvalues, std::size_t n, std::size_t m,
                                        std::uint64_t seed, double dt) {
  require(!eigenvalues.empty(), "synth_linear_series: no eigenvalues");
  require(m >= 1, "synth_linear_series: need m >= 1");
  for (std::size_t a = 0; a < eigenvalues.size(); ++a) {
    require(std::isfinite(eigenvalues[a].real()) && std::isfinite(eigenvalues[a].imag()),
            "synth_linear_series: non-finite eigenvalue");
    for (std::size_t b = a + 1; b < eigenvalues.size(); ++b)
      if (eigenvalues[a] == eigenvalues[b]) fail(ErrorKind::invalid_argument, "synth_linear_series: duplicate eigenvalues");
  }

  // Real blocks: one per real eigenvalue, one 2x2 block per conjugate pair
  // (taken from the member with positive imaginary part).
  struct Block {
    double re, im;
  };
  std::vector<Block> blocks;
  std::size_t q = 0;
  for (const auto& z : eigenvalues) {
    if (z.imag() == 0.0) {
      blocks.push_back({z.real(), 0.0});
      q += 1;
    } else if (z.imag() > 0.0) {
      const bool paired = std::find(eigenvalues.begin(), eigenvalues.end(), std::conj(z)) != eigenvalues.end();
      if (!paired) fail(ErrorKind::invalid_argument, "synth_linear_series: complex eigenvalue without its conjugate");
      blocks.push_back({z.real(), z.imag()});
      q += 2;
    } else if (std::find(eigenvalues.begin(), eigenvalues.end(), std::conj(z)) == eigenvalues.end()) {
      fail(ErrorKind::invalid_argument, "synth_linear_series: complex eigenvalue without its conjugate");
    }
  }
  require(n >= q, "synth_linear_series: n smaller than the number of eigenvalues");

  CounterRng rng(seed);
  linalg::Matrix gauss(n, q);
  for (double& v : gauss.data()) v = rng.next_gaussian();
  const linalg::Matrix phi = linalg::householder_qr(gauss).q;
  std::vector<double> x(q);
  for (double& v : x) v = 1.0 + rng.next_uniform();

  linalg::Matrix y(n, m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    y.set_column(k, phi * x);
    std::size_t j = 0;
    for (const auto& b : blocks) {
      if (b.im == 0.0) {
        x[j] *= b.re;
        j += 1;
      } else {
        const double x0 = x[j], x1 = x[j + 1];
        x[j] = b.re * x0 - b.im * x1;
        x[j + 1] = b.im * x0 + b.re * x1;
        j += 2;
      }
    }
  }
  MeshPtr line;
  if (n >= 2) line = std::make_shared<const mesh::SimplicialMesh>(mesh::build_interval_mesh(0.0, 1.0, static_cast<int>(n) - 1));
  return dmd::make_snapshots(std::move(y), 0.0, dt, "u", line);
}

}  // namespace amrdmd::seird
