#pragma once

#include "amrdmd/fem.hpp"

namespace amrdmd::l2projection {

using fem::FeField;
using fem::MeshPtr;

struct ProjectionConfig {
  int quad_degree = 4;
  // Each target element is split uniformly this many times before quadrature
  // (1D: 2^s pieces, 2D: 4^s pieces), to follow donor kinks more closely.
  int sub_splits = 2;
  double cg_tolerance = 1e-12;
  int cg_max_iter = 0;
};

// Immutable pair (M, P) for projecting donor fields onto a target mesh.
class ProjectionOperator {
 public:
  ProjectionOperator(MeshPtr donor, MeshPtr target, fem::SparseSpd mass, fem::CsrMatrix coupling,
                     ProjectionConfig config)
      : donor_(std::move(donor)),
        target_(std::move(target)),
        mass_(std::move(mass)),
        coupling_(std::move(coupling)),
        config_(config) {}

  const MeshPtr& donor() const { return donor_; }
  const MeshPtr& target() const { return target_; }
  const fem::SparseSpd& mass() const { return mass_; }
  // Rectangular target-nodes x donor-nodes coupling matrix.
  const fem::CsrMatrix& coupling() const { return coupling_; }
  const ProjectionConfig& config() const { return config_; }

 private:
  MeshPtr donor_;
  MeshPtr target_;
  fem::SparseSpd mass_;
  fem::CsrMatrix coupling_;
  ProjectionConfig config_;
};

// Throws coverage-error if a target quadrature point cannot be located in the donor.
ProjectionOperator build_projection(MeshPtr donor, MeshPtr target, const ProjectionConfig& config = {});

struct ProjectionResult {
  FeField field;
  // ||M u_proj - P u|| / ||P u||
  double galerkin_residual = 0.0;
  int iterations = 0;
};

ProjectionResult project_with_report(const ProjectionOperator& op, const FeField& u);
FeField project(const ProjectionOperator& op, const FeField& u);

// Numerical rank of P from column-pivoted QR, threshold 1e-10 max|R_ii|.
std::size_t rank_check(const ProjectionOperator& op);

}  // namespace amrdmd::l2projection
