#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/seird.hpp"

using namespace amrdmd;
using namespace amrdmd::seird;

using mesh::Index;

namespace {

MeshPtr line(int elements) {
  return std::make_shared<const mesh::SimplicialMesh>(mesh::build_interval_mesh(0.0, 1.0, elements));
}

SeirdParams no_dynamics() {
  SeirdParams p;
  p.beta_i = p.beta_e = p.alpha = p.gamma_e = p.gamma_i = p.delta = 0.0;
  p.nu_s = p.nu_e = p.nu_i = p.nu_r = 0.0;
  return p;
}

double at(const State& st, std::size_t c, double x) {
  for (std::size_t k = 0; k < st.mesh->num_nodes(); ++k)
    if (std::abs(st.mesh->node(static_cast<Index>(k))[0] - x) < 1e-12) return st.u[c][k];
  FAIL("no node at " << x);
  return 0.0;
}

// Mass-matrix integral of a nodal P1 field on a 1D mesh (trapezoid is exact).
double integral(const State& st, std::size_t c) {
  double s = 0.0;
  for (std::size_t e = 0; e < st.mesh->num_elements(); ++e) {
    const auto& el = st.mesh->element(static_cast<Index>(e));
    s += 0.5 * st.mesh->measure(static_cast<Index>(e)) * (st.u[c][el[0]] + st.u[c][el[1]]);
  }
  return s;
}

State run_steps(State st, const SeirdParams& p, long steps) {
  State prev;
  bool have_prev = false;
  for (long n = 0; n < steps; ++n) {
    State next = step(st, have_prev ? &prev : nullptr, p, {});
    prev = std::move(st);
    st = std::move(next);
    have_prev = true;
  }
  return st;
}

}  // namespace

TEST_CASE("initial conditions follow the exponential-sum profiles") {
  const auto m = line(1000);
  const State st = seird_initial_conditions(m);
  CHECK(at(st, 1, 0.75) == doctest::Approx(0.05).epsilon(1e-14));
  for (std::size_t k = 0; k < m->num_nodes(); ++k) CHECK(st.u[1][k] <= 0.05);
  // s has a local maximum close to x = 0.35 from the Gaussian term.
  std::size_t best = 0;
  double peak = -1.0;
  for (std::size_t k = 0; k < m->num_nodes(); ++k) {
    const double x = m->node(static_cast<Index>(k))[0];
    if (x > 0.2 && x < 0.4 && st.u[0][k] > peak) {
      peak = st.u[0][k];
      best = k;
    }
  }
  CHECK(std::abs(m->node(static_cast<Index>(best))[0] - 0.35) < 0.02);
  const double x0 = 0.35;
  const double direct = std::exp(-std::pow(x0 + 1.0, 4)) + 1.0 + 0.125 * std::exp(-std::pow(x0 - 0.42, 4) / 1e-5) +
                        0.125 * std::exp(-std::pow(x0 - 0.52, 4) / 1e-5);
  CHECK(at(st, 0, 0.35) == doctest::Approx(direct).epsilon(1e-13));
  for (std::size_t c = 2; c < kNumCompartments; ++c)
    for (double v : st.u[c]) CHECK(v == 0.0);

  const auto square = std::make_shared<const mesh::SimplicialMesh>(
      mesh::build_structured_triangle_mesh({0, 1}, {0, 1}, 2, 2));
  CHECK_THROWS_AS(seird_initial_conditions(square), Error);
}

TEST_CASE("zero state is a fixed point") {
  State st;
  st.mesh = line(50);
  for (auto& c : st.u) c.assign(st.mesh->num_nodes(), 0.0);
  const State out = run_steps(st, SeirdParams{}, 8);
  for (const auto& c : out.u)
    for (double v : c) CHECK(v == 0.0);
}

TEST_CASE("without dynamics the state does not move") {
  // Start from a state that already satisfies the boundary condition.
  auto st = seird_initial_conditions(line(200));
  for (auto& c : st.u) c.back() = 0.0;
  const State out = run_steps(st, no_dynamics(), 20);
  CHECK(out.t == doctest::Approx(5.0));
  for (std::size_t c = 0; c < kNumCompartments; ++c)
    for (std::size_t k = 0; k < st.mesh->num_nodes(); ++k) CHECK(std::abs(out.u[c][k] - st.u[c][k]) <= 1e-12);
}

TEST_CASE("pure diffusion decays the lowest mode at the heat-kernel rate") {
  // A large resting r population fixes n_pop, so s diffuses linearly with
  // diffusivity nu_s * n_pop. Neumann at 0 and Dirichlet at 1 make
  // cos(pi x / 2) the slowest mode, decaying like exp(-nu n (pi/2)^2 t).
  const double background = 1.0, eps = 1e-6, nu = 0.05;
  SeirdParams p = no_dynamics();
  p.nu_s = nu;
  p.dt = 0.01;
  State st;
  st.mesh = line(400);
  for (auto& c : st.u) c.assign(st.mesh->num_nodes(), 0.0);
  for (std::size_t k = 0; k < st.mesh->num_nodes(); ++k) {
    const double x = st.mesh->node(static_cast<Index>(k))[0];
    st.u[0][k] = eps * std::cos(std::numbers::pi * x / 2.0);
    st.u[3][k] = x < 1.0 ? background : 0.0;
  }
  const double t = 8.0;
  const State out = run_steps(st, p, std::lround(t / p.dt));
  const double rate = -std::log(at(out, 0, 0.0) / at(st, 0, 0.0)) / t;
  const double oracle = nu * background * std::numbers::pi * std::numbers::pi / 4.0;
  CHECK(std::abs(rate - oracle) <= 0.01 * oracle);
  // The shape stays the cosine.
  CHECK(at(out, 0, 0.5) / at(out, 0, 0.0) == doctest::Approx(std::cos(std::numbers::pi / 4.0)).epsilon(0.01));
}

TEST_CASE("reactions on a flat interior match the ODE system") {
  // Far from the Dirichlet node a spatially constant state evolves as the
  // local ODE; compare against a fine RK4 integration of it.
  SeirdParams p;
  p.nu_s = p.nu_e = p.nu_i = p.nu_r = 0.0;
  p.beta_i = p.beta_e = 0.6;
  p.dt = 0.005;
  State st;
  st.mesh = line(100);
  const double y0[6] = {0.9, 0.08, 0.02, 0.0, 0.0, 0.0};
  for (std::size_t c = 0; c < kNumCompartments; ++c) {
    st.u[c].assign(st.mesh->num_nodes(), y0[c]);
    for (std::size_t k = 0; k < st.mesh->num_nodes(); ++k)
      if (st.mesh->node(static_cast<Index>(k))[0] == 1.0) st.u[c][k] = 0.0;
  }
  const double t_end = 4.0;
  const State out = run_steps(st, p, std::lround(t_end / p.dt));

  using Y = std::array<double, 6>;
  const auto rhs = [&](const Y& y) {
    const double inf = (p.beta_i * y[2] + p.beta_e * y[1]) * y[0];
    return Y{-inf,
             inf - (p.alpha + p.gamma_e) * y[1],
             p.alpha * y[1] - (p.gamma_i + p.delta) * y[2],
             p.gamma_e * y[1] + p.gamma_i * y[2],
             p.delta * y[2],
             p.alpha * y[1]};
  };
  Y y{y0[0], y0[1], y0[2], y0[3], y0[4], y0[5]};
  const int n = 40000;
  const double h = t_end / n;
  for (int k = 0; k < n; ++k) {
    const auto axpy = [](const Y& a, double s, const Y& b) {
      Y r;
      for (int j = 0; j < 6; ++j) r[j] = a[j] + s * b[j];
      return r;
    };
    const Y k1 = rhs(y), k2 = rhs(axpy(y, h / 2, k1)), k3 = rhs(axpy(y, h / 2, k2)), k4 = rhs(axpy(y, h, k3));
    for (int j = 0; j < 6; ++j) y[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  for (std::size_t c = 0; c < kNumCompartments; ++c) {
    INFO("compartment " << kCompartments[c]);
    CHECK(std::abs(at(out, c, 0.0) - y[c]) <= 1e-5 * std::max(1.0, std::abs(y[c])));
  }
}

TEST_CASE("living population is conserved without deaths or boundary flux") {
  SeirdParams p;
  p.delta = 0.0;
  p.nu_s = p.nu_e = p.nu_i = p.nu_r = 0.0;
  State st = seird_initial_conditions(line(500));
  const auto living = [](const State& s) { return integral(s, 0) + integral(s, 1) + integral(s, 2) + integral(s, 3); };
  double before = living(st);
  State prev;
  bool have_prev = false;
  for (int n = 0; n < 40; ++n) {
    State next = step(st, have_prev ? &prev : nullptr, p, {});
    const double after = living(next);
    CHECK(std::abs(after - before) <= 1e-6 * before);
    before = after;
    prev = std::move(st);
    st = std::move(next);
    have_prev = true;
  }
}

TEST_CASE("Picard failure is a step error") {
  SolverSettings tight;
  tight.picard_max_iter = 1;
  tight.picard_tolerance = 1e-30;
  const auto st = seird_initial_conditions(line(100));
  try {
    step(st, nullptr, SeirdParams{}, tight);
    FAIL("expected a step error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::step);
    CHECK(std::string(e.what()).find("t = 0.25") != std::string::npos);
  }
}

TEST_CASE("parameter and policy validation") {
  SeirdParams p;
  CHECK(p.num_steps() == 176);
  CHECK(p.output_stride() == 1);
  p.dt_o = 0.3;
  CHECK_THROWS_AS(p.check(), Error);
  p = SeirdParams{};
  p.alpha = -1.0;
  CHECK_THROWS_AS(p.check(), Error);
  AmrPolicy a;
  a.refine_fraction = 0.99;
  CHECK_THROWS_AS(a.check(), Error);
  a = AmrPolicy{};
  a.max_level = 1;
  CHECK_THROWS_AS(a.check(), Error);
}

TEST_CASE("preset run: output count, resolution limits and population") {
  const SeirdRun run = run_seird_amr(SeirdParams{}, AmrPolicy{});
  REQUIRE(run.times.size() == 177);
  CHECK(run.times.back() == doctest::Approx(44.0).epsilon(1e-15));
  CHECK(run.reference->num_elements() == 500);
  for (std::size_t c = 0; c < kNumCompartments; ++c) {
    CHECK(run.snapshots[c].rows() == 501);
    CHECK(run.snapshots[c].cols() == 177);
  }
  for (double h : run.min_element_size) CHECK(h >= 0.002 - 1e-15);
  for (std::size_t e = 0; e < run.final_state.mesh->num_elements(); ++e)
    CHECK(run.final_state.mesh->level(static_cast<Index>(e)) <= 2);
  for (double v : run.population_simulation.values) CHECK(std::abs(v - 1.0) <= 1e-3);
  for (double v : run.population_projected.values) CHECK(std::abs(v - 1.0) <= 1e-3);
  CHECK(run.max_picard_iterations <= 25);
  const auto y = run.snapshot_matrix("i");
  CHECK(y.dt == doctest::Approx(0.25));
  CHECK(y.field_name == "i");
}

TEST_CASE("disabled adaptation reproduces the fixed-mesh trajectory") {
  SeirdParams p;
  p.t_end = 5.0;
  AmrPolicy a;
  a.remesh_every = 0;
  const SeirdRun run = run_seird_amr(p, a);
  State st = seird_initial_conditions(initial_mesh(a));
  State prev;
  bool have_prev = false;
  for (long n = 1; n <= p.num_steps(); ++n) {
    State next = step(st, have_prev ? &prev : nullptr, p, {});
    prev = std::move(st);
    st = std::move(next);
    have_prev = true;
  }
  for (std::size_t c = 0; c < kNumCompartments; ++c) {
    const auto& col = run.snapshots[c];
    double worst = 0.0;
    for (std::size_t k = 0; k < st.u[c].size(); ++k)
      worst = std::max(worst, std::abs(col(k, col.cols() - 1) - st.u[c][k]));
    CHECK(worst <= 1e-10);
  }
  for (auto n : run.element_counts) CHECK(n == 500);
}

TEST_CASE("config parsing") {
  std::istringstream ok("# preset\nalpha = 0.1   # comment\nremesh_every=2\n\nt_end = 10\n");
  const RunConfig cfg = parse_config(ok, "run.cfg");
  CHECK(cfg.params.alpha == 0.1);
  CHECK(cfg.policy.remesh_every == 2);
  CHECK(cfg.params.t_end == 10.0);
  CHECK(cfg.generator == "seird");

  const auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_config(in, "x.cfg");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_of("alpha = 0.1\nbogus = 3\n").find("x.cfg:2") != std::string::npos);
  CHECK(error_of("alpha = 0.1\nalpha = 0.2\n").find("duplicate") != std::string::npos);
  CHECK(error_of("\n\nalpha = zero\n").find("x.cfg:3") != std::string::npos);
  CHECK(error_of("# nothing\n").find("empty") != std::string::npos);
  CHECK(error_of("dt_o = 0.3\n").find("dt_o") != std::string::npos);
  CHECK(error_of("generator = linear\nn = 10\n").find("eigenvalues") != std::string::npos);

  std::istringstream lin("generator = linear\neigenvalues = 0.95, 0.8, 0.6@0.4\nn = 200\nm = 40\nseed = 7\n");
  const RunConfig l = parse_config(lin, "lin.cfg");
  REQUIRE(l.eigenvalues.size() == 4);
  CHECK(std::abs(l.eigenvalues[2] - std::polar(0.6, 0.4)) < 1e-16);
  CHECK(l.eigenvalues[3] == std::conj(l.eigenvalues[2]));
  CHECK(l.seed == 7);
  CHECK(l.seed_set);
}

TEST_CASE("synthetic linear series") {
  const linalg::Complex one[] = {{1.0, 0.0}};
  const auto c = synth_linear_series(one, 5, 10, 3);
  for (std::size_t k = 0; k <= 10; ++k)
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(c.data(i, k) - c.data(i, 0)) <= 1e-15);

  const linalg::Complex half[] = {{0.5, 0.0}};
  const auto g = synth_linear_series(half, 1, 6, 3);
  for (std::size_t k = 1; k <= 6; ++k) CHECK(g.data(0, k) == doctest::Approx(0.5 * g.data(0, k - 1)).epsilon(1e-15));

  // A decaying rotation: sign changes of a projected coordinate every pi/0.3 samples.
  const linalg::Complex pair[] = {std::polar(0.9, 0.3), std::polar(0.9, -0.3)};
  const std::size_t m = 120;
  const auto osc = synth_linear_series(pair, 2, m, 11);
  int crossings = 0;
  for (std::size_t k = 1; k <= m; ++k)
    if ((osc.data(0, k) > 0) != (osc.data(0, k - 1) > 0)) ++crossings;
  const double expected = 0.3 * static_cast<double>(m) / std::numbers::pi;
  CHECK(std::abs(crossings - expected) <= 1.0);
  // Same seed, same data.
  const auto again = synth_linear_series(pair, 2, m, 11);
  CHECK(std::equal(again.data.data().begin(), again.data.data().end(), osc.data.data().begin()));

  const linalg::Complex dup[] = {{0.5, 0.0}, {0.5, 0.0}};
  CHECK_THROWS_AS(synth_linear_series(dup, 4, 5, 0), Error);
  const linalg::Complex lonely[] = {std::polar(0.9, 0.3)};
  CHECK_THROWS_AS(synth_linear_series(lonely, 4, 5, 0), Error);
}

TEST_CASE("indicator demo: adapted mesh size and structured projection") {
  const IndicatorDemo d = indicator_projection_demo();
  CHECK(d.adaptive.mesh->num_elements() == 1672);
  CHECK(d.adaptive.mesh->num_nodes() == 857);
  CHECK(d.structured.mesh->num_elements() == 12800);
  CHECK(d.structured.mesh->num_nodes() == 6561);
  CHECK(d.adaptive_inf == 1.0);
  CHECK(std::abs(d.structured_inf - 1.0) <= 0.01);
  CHECK(d.unstructured.mesh->num_elements() > d.structured.mesh->num_elements());
}
