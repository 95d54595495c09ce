#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/l2projection.hpp"
#include "amrdmd/rng.hpp"
#include "amrdmd/seird.hpp"

namespace amrdmd::seird {

using mesh::Index;

namespace {

enum : std::size_t { S, E, I, R, D, C };

long checked_ratio(double num, double den, const char* what) {
  const double q = num / den;
  const long k = std::lround(q);
  if (k < 1 || std::abs(q - static_cast<double>(k)) > 1e-9 * std::max(1.0, q))
    fail(ErrorKind::invalid_argument, std::string(what) + " must be a positive integer multiple of dt");
  return k;
}

}  // namespace

void SeirdParams::check() const {
  for (double v : {beta_i, beta_e, alpha, gamma_e, gamma_i, delta, nu_s, nu_e, nu_i, nu_r, allee})
    require(v >= 0.0 && std::isfinite(v), "seird: rates, diffusivities and the Allee constant must be >= 0");
  require(dt > 0.0 && std::isfinite(dt), "seird: dt must be positive");
  require(t_end > 0.0 && std::isfinite(t_end), "seird: t_end must be positive");
  checked_ratio(dt_o, dt, "dt_o");
  checked_ratio(t_end, dt, "t_end");
}

long SeirdParams::output_stride() const { return checked_ratio(dt_o, dt, "dt_o"); }
long SeirdParams::num_steps() const { return checked_ratio(t_end, dt, "t_end"); }

void AmrPolicy::check() const {
  require(initial_elements >= 1, "amr: initial_elements must be >= 1");
  require(initial_uniform_levels >= 0, "amr: initial_uniform_levels must be >= 0");
  require(remesh_every >= 0, "amr: remesh_every must be >= 0");
  require(refine_fraction >= 0.0 && refine_fraction <= 1.0, "amr: refine_fraction must lie in [0, 1]");
  require(coarsen_fraction >= 0.0 && coarsen_fraction <= 1.0, "amr: coarsen_fraction must lie in [0, 1]");
  require(refine_fraction + coarsen_fraction <= 1.0, "amr: refine_fraction + coarsen_fraction must be <= 1");
  require(max_level >= initial_uniform_levels, "amr: max_level below the initial uniform level");
}

std::size_t compartment_index(const std::string& name) {
  for (std::size_t k = 0; k < kNumCompartments; ++k)
    if (name == kCompartments[k]) return k;
  fail(ErrorKind::invalid_argument, "unknown compartment '" + name + "'");
}

State seird_initial_conditions(MeshPtr mesh) {
  require(mesh && mesh->dim() == 1, "seird_initial_conditions: needs a 1D mesh");
  State st;
  st.mesh = mesh;
  for (auto& c : st.u) c.assign(mesh->num_nodes(), 0.0);
  const auto quartic = [](double x, double c) { return std::exp(-std::pow(x - c, 4) / 1e-5); };
  for (std::size_t k = 0; k < mesh->num_nodes(); ++k) {
    const double x = mesh->node(static_cast<Index>(k))[0];
    st.u[S][k] = std::exp(-std::pow(x + 1.0, 4)) + std::exp(-(x - 0.35) * (x - 0.35) / 1e-2) +
                 0.125 * (quartic(x, 0.62) + quartic(x, 0.52) + quartic(x, 0.42)) + 0.25 * quartic(x, 0.735);
    st.u[E][k] = quartic(x, 0.75) / 20.0;
  }
  return st;
}

qoi::FieldSet to_fields(const State& state) {
  qoi::FieldSet set;
  for (std::size_t k = 0; k < kNumCompartments; ++k)
    set[kCompartments[k]] = fem::make_field(state.mesh, state.u[k], kCompartments[k]);
  return set;
}

namespace {

// Tridiagonal matrix in sorted-node order: row i couples i-1, i, i+1.
struct Tridiagonal {
  std::vector<double> lo, di, up;

  explicit Tridiagonal(std::size_t n = 0) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
  std::size_t size() const { return di.size(); }

  std::vector<double> multiply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = di[i] * x[i];
      if (i > 0) v += lo[i] * x[i - 1];
      if (i + 1 < n) v += up[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }

  // Thomas algorithm; the matrices here are diagonally dominant.
  std::vector<double> solve(std::vector<double> b) const {
    const std::size_t n = size();
    std::vector<double> c(n), d(n);
    double denom = di[0];
    if (denom == 0.0) fail(ErrorKind::step, "tridiagonal solve: zero pivot");
    c[0] = n > 1 ? up[0] / denom : 0.0;
    d[0] = b[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = di[i] - lo[i] * c[i - 1];
      if (denom == 0.0 || !std::isfinite(denom)) fail(ErrorKind::step, "tridiagonal solve: zero pivot");
      c[i] = i + 1 < n ? up[i] / denom : 0.0;
      d[i] = (b[i] - lo[i] * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }
};

Tridiagonal combine(const Tridiagonal& a, double wa, const Tridiagonal& b, double wb) {
  Tridiagonal out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.lo[i] = wa * a.lo[i] + wb * b.lo[i];
    out.di[i] = wa * a.di[i] + wb * b.di[i];
    out.up[i] = wa * a.up[i] + wb * b.up[i];
  }
  return out;
}

// Row i of M scaled column-wise by g: the matrix of v -> M (g .* v).
Tridiagonal scale_columns(const Tridiagonal& m, const std::vector<double>& g) {
  Tridiagonal out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.di[i] = m.di[i] * g[i];
    if (i > 0) out.lo[i] = m.lo[i] * g[i - 1];
    if (i + 1 < m.size()) out.up[i] = m.up[i] * g[i + 1];
  }
  return out;
}

// P1 operators on a 1D mesh with nodes in ascending order.
struct LineSpace {
  std::vector<std::size_t> order;  // sorted position -> mesh node
  std::vector<double> x;
  Tridiagonal mass;

  explicit LineSpace(const mesh::SimplicialMesh& m) {
    const std::size_t n = m.num_nodes();
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.node(static_cast<Index>(a))[0] < m.node(static_cast<Index>(b))[0]; });
    for (std::size_t k : order) x.push_back(m.node(static_cast<Index>(k))[0]);
    require(m.num_elements() + 1 == n, "seird: 1D mesh must be a single chain of elements");
    mass = Tridiagonal(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double h = x[k + 1] - x[k];
      mass.di[k] += h / 3.0;
      mass.di[k + 1] += h / 3.0;
      mass.up[k] += h / 6.0;
      mass.lo[k + 1] += h / 6.0;
    }
  }

  std::size_t size() const { return x.size(); }

  // Stiffness of -(kappa(x) u')' with kappa = nu * coefficient, coefficient
  // linear per element (its element mean is exact for P1 gradients).
  Tridiagonal stiffness(double nu, const std::vector<double>& coefficient) const {
    Tridiagonal k(size());
    for (std::size_t j = 0; j + 1 < size(); ++j) {
      const double h = x[j + 1] - x[j];
      const double kappa = nu * 0.5 * (coefficient[j] + coefficient[j + 1]) / h;
      k.di[j] += kappa;
      k.di[j + 1] += kappa;
      k.up[j] -= kappa;
      k.lo[j + 1] -= kappa;
    }
    return k;
  }

  std::vector<double> gather(const std::vector<double>& mesh_values) const {
    std::vector<double> v(size());
    for (std::size_t k = 0; k < size(); ++k) v[k] = mesh_values[order[k]];
    return v;
  }

  std::vector<double> scatter(const std::vector<double>& sorted) const {
    std::vector<double> v(size());
    for (std::size_t k = 0; k < size(); ++k) v[order[k]] = sorted[k];
    return v;
  }
};

// Zero value at the last (x = 1) node.
void apply_dirichlet(Tridiagonal& a, std::vector<double>& rhs) {
  const std::size_t n = a.size() - 1;
  a.lo[n] = 0.0;
  a.di[n] = 1.0;
  a.up[n] = 0.0;
  rhs[n] = 0.0;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

State step(const State& now, const State* previous, const SeirdParams& p, const SolverSettings& solver,
           StepInfo* info) {
  require(now.mesh && now.mesh->dim() == 1, "seird step: needs a 1D state");
  if (previous)
    require(previous->mesh == now.mesh || previous->mesh->same_geometry(*now.mesh),
            "seird step: previous state lives on a different mesh");
  const LineSpace space(*now.mesh);
  const std::size_t n = space.size();

  // BDF coefficients: (a0 u^{n+1} + a1 u^n + a2 u^{n-1}) / dt.
  const double a0 = previous ? 1.5 : 1.0, a1 = previous ? -2.0 : -1.0, a2 = previous ? 0.5 : 0.0;
  std::array<std::vector<double>, kNumCompartments> history, cur;
  for (std::size_t c = 0; c < kNumCompartments; ++c) {
    cur[c] = space.gather(now.u[c]);
    std::vector<double> h(n);
    const std::vector<double> prev = previous ? space.gather(previous->u[c]) : std::vector<double>(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) h[k] = -(a1 * cur[c][k] + a2 * prev[k]) / p.dt;
    history[c] = space.mass.multiply(h);
  }

  const Tridiagonal& m = space.mass;
  const double inv_dt = a0 / p.dt;
  int it = 0;
  double update = 0.0;
  for (; it < solver.picard_max_iter; ++it) {
    const auto old = cur;
    std::vector<double> npop(n), g(n);
    for (std::size_t k = 0; k < n; ++k) {
      npop[k] = cur[S][k] + cur[E][k] + cur[I][k] + cur[R][k];
      double allee = 1.0;
      if (p.allee != 0.0) allee = npop[k] > 0.0 ? 1.0 - p.allee / npop[k] : 0.0;
      g[k] = allee * (p.beta_i * cur[I][k] + p.beta_e * cur[E][k]);
    }

    const auto solve = [&](std::size_t c, Tridiagonal a, const std::vector<double>& source) {
      std::vector<double> rhs = history[c];
      for (std::size_t k = 0; k < n; ++k) rhs[k] += source[k];
      apply_dirichlet(a, rhs);
      cur[c] = a.solve(std::move(rhs));
    };
    const std::vector<double> none(n, 0.0);

    // s: lagged infection pressure g acting on the new s.
    solve(S, combine(combine(m, inv_dt, space.stiffness(p.nu_s, npop), 1.0), 1.0, scale_columns(m, g), 1.0), none);
    std::vector<double> infection(n);
    for (std::size_t k = 0; k < n; ++k) infection[k] = g[k] * cur[S][k];
    solve(E, combine(m, inv_dt + p.alpha + p.gamma_e, space.stiffness(p.nu_e, npop), 1.0), m.multiply(infection));
    std::vector<double> onset(n);
    for (std::size_t k = 0; k < n; ++k) onset[k] = p.alpha * cur[E][k];
    solve(I, combine(m, inv_dt + p.gamma_i + p.delta, space.stiffness(p.nu_i, npop), 1.0), m.multiply(onset));
    std::vector<double> recovery(n), deaths(n);
    for (std::size_t k = 0; k < n; ++k) {
      recovery[k] = p.gamma_e * cur[E][k] + p.gamma_i * cur[I][k];
      deaths[k] = p.delta * cur[I][k];
    }
    solve(R, combine(m, inv_dt, space.stiffness(p.nu_r, npop), 1.0), m.multiply(recovery));
    solve(D, combine(m, inv_dt, m, 0.0), m.multiply(deaths));
    solve(C, combine(m, inv_dt, m, 0.0), m.multiply(onset));

    update = 0.0;
    for (std::size_t c = 0; c < kNumCompartments; ++c) {
      std::vector<double> diff(n);
      for (std::size_t k = 0; k < n; ++k) diff[k] = cur[c][k] - old[c][k];
      const double scale = norm(cur[c]);
      update = std::max(update, scale > 0.0 ? norm(diff) / scale : norm(diff));
      for (double v : cur[c])
        if (!std::isfinite(v)) fail(ErrorKind::step, "seird step: non-finite value in compartment " + std::string(kCompartments[c]));
    }
    if (update <= solver.picard_tolerance) break;
  }
  if (it == solver.picard_max_iter) {
    std::ostringstream msg;
    msg << "seird step at t = " << now.t + p.dt << ": Picard iteration did not converge in "
        << solver.picard_max_iter << " iterations (last relative update " << update << ")";
    fail(ErrorKind::step, msg.str());
  }
  if (info) {
    info->picard_iterations = it + 1;
    info->picard_update = update;
  }

  State next;
  next.mesh = now.mesh;
  next.t = now.t + p.dt;
  for (std::size_t c = 0; c < kNumCompartments; ++c) next.u[c] = space.scatter(cur[c]);
  return next;
}

MeshPtr initial_mesh(const AmrPolicy& policy) {
  policy.check();
  return std::make_shared<const mesh::SimplicialMesh>(
      mesh::refine_uniformly(mesh::build_interval_mesh(0.0, 1.0, policy.initial_elements), policy.initial_uniform_levels));
}

dmd::SnapshotMatrix SeirdRun::snapshot_matrix(const std::string& compartment) const {
  const std::size_t c = compartment_index(compartment);
  const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
  return dmd::make_snapshots(snapshots[c], times.empty() ? 0.0 : times[0], dt, compartment, reference);
}

namespace {

State transfer(const State& st, const MeshPtr& target) {
  const auto op = l2projection::build_projection(st.mesh, target);
  State out;
  out.mesh = target;
  out.t = st.t;
  for (std::size_t c = 0; c < kNumCompartments; ++c)
    out.u[c] = l2projection::project(op, fem::make_field(st.mesh, st.u[c], kCompartments[c])).values;
  return out;
}

// Flux-jump flagging: rank by the indicator summed over s, e, i; refine the top
// fraction below max_level, coarsen the bottom fraction where both siblings are flagged.
mesh::RefinementPlan flag(const State& st, const AmrPolicy& policy) {
  const mesh::SimplicialMesh& m = *st.mesh;
  const std::size_t ne = m.num_elements();
  std::vector<double> score(ne, 0.0);
  for (std::size_t c : {S, E, I}) {
    const auto eta = fem::flux_jump_indicator(fem::make_field(st.mesh, st.u[c]));
    for (std::size_t e = 0; e < ne; ++e) score[e] += eta[e];
  }
  std::vector<Index> rank(ne);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](Index a, Index b) { return score[a] > score[b]; });

  mesh::RefinementPlan plan;
  plan.max_level = policy.max_level;
  const auto n_refine = static_cast<std::size_t>(policy.refine_fraction * static_cast<double>(ne));
  const auto n_coarsen = static_cast<std::size_t>(policy.coarsen_fraction * static_cast<double>(ne));
  for (std::size_t k = 0; k < n_refine; ++k)
    if (m.level(rank[k]) < policy.max_level) plan.refine.insert(rank[k]);
  std::set<Index> candidates;
  for (std::size_t k = ne - n_coarsen; k < ne; ++k)
    if (m.level(rank[k]) > 0 && !plan.refine.count(rank[k])) candidates.insert(rank[k]);
  for (Index e : candidates) {
    const Index sib = m.sibling(e);
    if (sib >= 0 && candidates.count(sib)) plan.coarsen.insert(e);
  }
  return plan;
}

double population_of(const State& st) { return qoi::population_density(to_fields(st)); }

qoi::QoiSeries normalized(const std::vector<double>& times, const std::vector<double>& raw) {
  qoi::QoiSeries q;
  q.kind = "population";
  q.times = times;
  q.reference = raw.front();
  for (double v : raw) q.values.push_back(v / q.reference);
  return q;
}

double smallest_element(const mesh::SimplicialMesh& m) {
  double h = HUGE_VAL;
  for (std::size_t e = 0; e < m.num_elements(); ++e) h = std::min(h, m.measure(static_cast<Index>(e)));
  return h;
}

}  // namespace

SeirdRun run_seird_amr(const SeirdParams& params, const AmrPolicy& policy, const SolverSettings& solver,
                       MeshPtr reference) {
  params.check();
  policy.check();
  const MeshPtr start = initial_mesh(policy);
  SeirdRun run;
  run.reference = reference ? reference : start;
  require(run.reference->dim() == 1, "run_seird_amr: reference mesh must be 1D");

  using Clock = std::chrono::steady_clock;
  const long steps = params.num_steps();
  const long stride = params.output_stride();

  std::shared_ptr<l2projection::ProjectionOperator> to_reference;
  std::vector<std::vector<double>> columns[kNumCompartments];
  std::vector<double> pop_sim, pop_proj;

  const auto emit = [&](const State& st) {
    const auto t0 = Clock::now();
    if (!to_reference || to_reference->donor() != st.mesh)
      to_reference = std::make_shared<l2projection::ProjectionOperator>(
          l2projection::build_projection(st.mesh, run.reference));
    State projected;
    projected.mesh = run.reference;
    projected.t = st.t;
    for (std::size_t c = 0; c < kNumCompartments; ++c) {
      const auto res = l2projection::project_with_report(*to_reference, fem::make_field(st.mesh, st.u[c]));
      run.max_projection_residual = std::max(run.max_projection_residual, res.galerkin_residual);
      projected.u[c] = res.field.values;
      columns[c].push_back(res.field.values);
    }
    run.seconds_projection += std::chrono::duration<double>(Clock::now() - t0).count();
    pop_sim.push_back(population_of(st));
    pop_proj.push_back(population_of(projected));
    run.times.push_back(static_cast<double>(run.times.size()) * params.dt_o);
    run.element_counts.push_back(st.mesh->num_elements());
    run.min_element_size.push_back(smallest_element(*st.mesh));
    run.outputs.push_back(st);
  };

  State now = seird_initial_conditions(start);
  State prev;
  bool have_prev = false;
  emit(now);

  auto t_sim = Clock::now();
  for (long n = 1; n <= steps; ++n) {
    StepInfo info;
    State next;
    try {
      next = step(now, have_prev ? &prev : nullptr, params, solver, &info);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "at step " << n << " (t = " << static_cast<double>(n) * params.dt << "): " << e.what();
      throw Error(e.kind(), msg.str());
    }
    next.t = static_cast<double>(n) * params.dt;
    run.max_picard_iterations = std::max(run.max_picard_iterations, info.picard_iterations);
    prev = std::move(now);
    now = std::move(next);
    have_prev = true;

    if (n % stride == 0) {
      run.seconds_simulation += std::chrono::duration<double>(Clock::now() - t_sim).count();
      emit(now);
      t_sim = Clock::now();
    }

    if (policy.remesh_every > 0 && n % policy.remesh_every == 0 && n < steps) {
      const auto plan = flag(now, policy);
      if (!plan.refine.empty() || !plan.coarsen.empty()) {
        const auto adapted = std::make_shared<const mesh::SimplicialMesh>(mesh::refine(*now.mesh, plan));
        now = transfer(now, adapted);
        prev = transfer(prev, adapted);
      }
    }
  }
  run.seconds_simulation += std::chrono::duration<double>(Clock::now() - t_sim).count();

  for (std::size_t c = 0; c < kNumCompartments; ++c) run.snapshots[c] = linalg::Matrix::from_columns(columns[c]);
  run.population_simulation = normalized(run.times, pop_sim);
  run.population_projected = normalized(run.times, pop_proj);
  run.final_state = std::move(now);
  return run;
}

}  // namespace amrdmd::seird
