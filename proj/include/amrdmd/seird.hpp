#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amrdmd/dmd.hpp"
#include "amrdmd/fem.hpp"
#include "amrdmd/qoi.hpp"

namespace amrdmd::seird {

using fem::MeshPtr;

// Paper preset for the 1D outbreak example; units are days and km.
struct SeirdParams {
  double beta_i = 0.375;
  double beta_e = 0.375;
  double alpha = 0.09375;
  double gamma_e = 0.125;
  double gamma_i = 0.03125;
  double delta = 0.0046875;
  double nu_s = 3.75e-5;
  double nu_e = 0.75e-3;
  double nu_i = 0.75e-10;
  double nu_r = 3.75e-5;
  double allee = 0.0;
  double dt = 0.25;
  double dt_o = 0.25;
  double t_end = 44.0;

  void check() const;
  // Output interval in steps.
  long output_stride() const;
  long num_steps() const;
};

struct AmrPolicy {
  int initial_elements = 125;
  int initial_uniform_levels = 2;
  int remesh_every = 4;  // 0 disables adaptation
  double refine_fraction = 0.3;
  double coarsen_fraction = 0.05;
  int max_level = 2;

  void check() const;
};

struct SolverSettings {
  double picard_tolerance = 1e-8;
  int picard_max_iter = 25;
};

// Compartments in storage order. c accumulates the inflow alpha*e into i.
inline constexpr std::array<const char*, 6> kCompartments{"s", "e", "i", "r", "d", "c"};
inline constexpr std::size_t kNumCompartments = kCompartments.size();

std::size_t compartment_index(const std::string& name);

struct State {
  MeshPtr mesh;
  std::array<std::vector<double>, kNumCompartments> u;
  double t = 0.0;
};

// Nodal s0, e0 on a 1D mesh over [0, 1]; the other compartments start at zero.
State seird_initial_conditions(MeshPtr mesh);
qoi::FieldSet to_fields(const State& state);

struct StepInfo {
  int picard_iterations = 0;
  double picard_update = 0.0;
};

// One step to now.t + dt: BDF2 when `previous` is given (same mesh, t - dt),
// otherwise backward Euler. Throws step-error if Picard does not converge.
State step(const State& now, const State* previous, const SeirdParams& params, const SolverSettings& solver,
           StepInfo* info = nullptr);

struct SeirdRun {
  MeshPtr reference;
  std::vector<double> times;
  // snapshots[c] holds one column per output time on the reference mesh.
  std::array<linalg::Matrix, kNumCompartments> snapshots;
  qoi::QoiSeries population_simulation;  // on the adaptive meshes
  qoi::QoiSeries population_projected;    // after projection
  std::vector<std::size_t> element_counts;  // adaptive mesh size per output
  std::vector<double> min_element_size;
  int max_picard_iterations = 0;
  double max_projection_residual = 0.0;
  double seconds_simulation = 0.0;
  double seconds_projection = 0.0;
  // Adaptive states at the output times, before projection.
  std::vector<State> outputs;
  // Final adaptive state, before projection.
  State final_state;

  dmd::SnapshotMatrix snapshot_matrix(const std::string& compartment) const;
};

// The reference mesh defaults to the uniformly refined initial mesh.
SeirdRun run_seird_amr(const SeirdParams& params, const AmrPolicy& policy, const SolverSettings& solver = {},
                       MeshPtr reference = nullptr);

MeshPtr initial_mesh(const AmrPolicy& policy);

// Indicator-function projection example: a 10x10 mesh refined three times
// around the edge of [-0.3, 0.3]^2, projected onto an 80x80 structured mesh
// and onto a finer perturbed mesh.
struct IndicatorDemo {
  fem::FeField adaptive;
  fem::FeField structured;
  fem::FeField unstructured;
  double adaptive_inf = 0.0;
  double structured_inf = 0.0;
  double unstructured_inf = 0.0;
};

IndicatorDemo indicator_projection_demo(std::uint64_t seed = 0);

// Flag rule of the demo: triangles that meet the closed square [-s, s]^2 but
// do not lie strictly inside it.
std::vector<mesh::Index> square_transition_elements(const mesh::SimplicialMesh& mesh, double s);

// Snapshots u_k = Phi Lambda^k c for k = 0..m with an orthonormal real modal
// basis. Complex eigenvalues must come with their conjugates.
dmd::SnapshotMatrix synth_linear_series(std::span<const linalg::Complex> eigenvalues, std::size_t n, std::size_t m,
                                        std::uint64_t seed, double dt = 1.0);

// Plain-text run configuration, `key = value` per line, '#' comments.
struct RunConfig {
  std::string generator = "seird";  // seird | linear
  SeirdParams params;
  AmrPolicy policy;
  SolverSettings solver;
  // Linear generator.
  std::vector<linalg::Complex> eigenvalues;
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  std::map<std::string, std::string> entries;  // as read, for manifests
};

RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig read_config(const std::filesystem::path& path);

}  // namespace amrdmd::seird
