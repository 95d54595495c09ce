#include <algorithm>
#include <cmath>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/l2projection.hpp"
#include "amrdmd/linalg.hpp"

namespace amrdmd::l2projection {

namespace {

using mesh::Index;
using Bary = std::array<double, 3>;
using SubCell = std::array<Bary, 3>;  // vertices in the parent's barycentric frame

Bary midpoint(const Bary& a, const Bary& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

// Uniform subdivision of the reference simplex; every piece has equal measure.
std::vector<SubCell> subdivide(int dim, int splits) {
  std::vector<SubCell> cells;
  if (dim == 1)
    cells.push_back({Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 0}});
  else
    cells.push_back({Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}});
  for (int s = 0; s < splits; ++s) {
    std::vector<SubCell> next;
    for (const SubCell& c : cells) {
      if (dim == 1) {
        const Bary m = midpoint(c[0], c[1]);
        next.push_back({c[0], m, Bary{}});
        next.push_back({m, c[1], Bary{}});
      } else {
        const Bary m01 = midpoint(c[0], c[1]);
        const Bary m12 = midpoint(c[1], c[2]);
        const Bary m20 = midpoint(c[2], c[0]);
        next.push_back({c[0], m01, m20});
        next.push_back({m01, c[1], m12});
        next.push_back({m20, m12, c[2]});
        next.push_back({m01, m12, m20});
      }
    }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace

ProjectionOperator build_projection(MeshPtr donor, MeshPtr target, const ProjectionConfig& config) {
  require(donor && target, "build_projection: null mesh");
  require(donor->dim() == target->dim(), "build_projection: dimension mismatch");
  require(config.sub_splits >= 0 && config.sub_splits <= 6, "build_projection: sub_splits out of range");

  const int dim = target->dim();
  const int nv = dim + 1;
  const fem::QuadratureRule rule = fem::quadrature(dim, config.quad_degree);
  const std::vector<SubCell> pieces = subdivide(dim, config.sub_splits);

  // Quadrature points and weights pulled back to the reference target element.
  std::vector<Bary> points;
  std::vector<double> weights;
  const double piece_fraction = 1.0 / static_cast<double>(pieces.size());
  for (const SubCell& piece : pieces) {
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      Bary lambda{0, 0, 0};
      for (int k = 0; k < nv; ++k)
        for (int j = 0; j < 3; ++j) lambda[j] += rule.points[q][k] * piece[k][j];
      points.push_back(lambda);
      weights.push_back(rule.weights[q] / rule.reference_measure() * piece_fraction);
    }
  }

  const mesh::PointLocator locator(*donor);
  std::vector<fem::Triplet> triplets;
  triplets.reserve(target->num_elements() * points.size() * static_cast<std::size_t>(nv * nv));
  std::vector<mesh::Point> missing;
  std::size_t n_missing = 0;

  // Accumulates one quadrature point of target element `id`.
  const auto add_point = [&](Index id, const Bary& lambda, double w) {
    const mesh::Point x = fem::to_physical(*target, id, lambda);
    const auto hit = locator.find(x);
    if (!hit) {
      ++n_missing;
      if (missing.size() < 8) missing.push_back(x);
      return;
    }
    const auto tnodes = target->element_nodes(id);
    const auto dnodes = donor->element_nodes(hit->element);
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) triplets.push_back({tnodes[i], dnodes[j], w * lambda[i] * hit->barycentric[j]});
  };

  if (dim == 1) {
    // In 1D the pieces are also cut at donor nodes, so every piece sees a
    // single donor polynomial and the rule integrates it exactly.
    std::vector<double> breaks;
    for (const auto& p : donor->nodes()) breaks.push_back(p[0]);
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t e = 0; e < target->num_elements(); ++e) {
      const auto id = static_cast<Index>(e);
      const double x0 = target->node(target->element(id)[0])[0];
      const double x1 = target->node(target->element(id)[1])[0];
      std::vector<double> cuts;  // local coordinate t in [0, 1]
      const int uniform = 1 << config.sub_splits;
      for (int k = 0; k <= uniform; ++k) cuts.push_back(static_cast<double>(k) / uniform);
      const double lo = std::min(x0, x1), hi = std::max(x0, x1);
      for (auto it = std::upper_bound(breaks.begin(), breaks.end(), lo); it != breaks.end() && *it < hi; ++it)
        cuts.push_back((*it - x0) / (x1 - x0));
      std::sort(cuts.begin(), cuts.end());
      const double measure = target->measure(id);
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double len = cuts[k + 1] - cuts[k];
        if (len <= 1e-14) continue;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
          const double t = cuts[k] + len * rule.points[q][1];
          add_point(id, Bary{1.0 - t, t, 0.0}, rule.weights[q] * len * measure);
        }
      }
    }
  } else {
    for (std::size_t e = 0; e < target->num_elements(); ++e) {
      const auto id = static_cast<Index>(e);
      const double measure = target->measure(id);
      for (std::size_t q = 0; q < points.size(); ++q) add_point(id, points[q], weights[q] * measure);
    }
  }
  if (n_missing > 0) {
    std::ostringstream msg;
    msg << "build_projection: " << n_missing << " quadrature point(s) not covered by the donor mesh, e.g.";
    for (const auto& p : missing) msg << " (" << p[0] << ", " << p[1] << ")";
    fail(ErrorKind::coverage, msg.str());
  }

  auto coupling = fem::CsrMatrix::from_triplets(target->num_nodes(), donor->num_nodes(), std::move(triplets));
  auto mass = fem::assemble_mass(*target);
  return ProjectionOperator(std::move(donor), std::move(target), std::move(mass), std::move(coupling), config);
}

ProjectionResult project_with_report(const ProjectionOperator& op, const FeField& u) {
  u.check();
  require(u.mesh == op.donor() || u.mesh->same_geometry(*op.donor()),
          "project: field '" + u.name + "' is not bound to the donor mesh");
  const std::vector<double> rhs = op.coupling().multiply(u.values);
  const fem::CgResult solved =
      fem::cg_solve(op.mass(), rhs, op.config().cg_tolerance, op.config().cg_max_iter);

  const std::vector<double> mx = op.mass().multiply(solved.x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    num += (mx[i] - rhs[i]) * (mx[i] - rhs[i]);
    den += rhs[i] * rhs[i];
  }
  ProjectionResult out{fem::make_field(op.target(), solved.x, u.name), 0.0, solved.iterations};
  out.galerkin_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return out;
}

FeField project(const ProjectionOperator& op, const FeField& u) { return project_with_report(op, u).field; }

std::size_t rank_check(const ProjectionOperator& op) {
  const fem::CsrMatrix& p = op.coupling();
  linalg::Matrix dense(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = p.row_ptr()[i]; k < p.row_ptr()[i + 1]; ++k) dense(i, p.col_idx()[k]) = p.values()[k];
  return linalg::numerical_rank(dense, 1e-10);
}

}  // namespace amrdmd::l2projection
