#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "amrdmd/dmd.hpp"
#include "amrdmd/error.hpp"
#include "test_support.hpp"

using namespace amrdmd;
using namespace amrdmd::dmd;
using amrdmd::testing::random_matrix;

namespace {

// Latent state advanced by a real block-diagonal map: 1x1 blocks for real
// eigenvalues, 2x2 rotation-scaling blocks for rho e^{+-i theta}. Snapshots are
// phi * x_k with a Gaussian phi. Returned column k is the state after k steps.
struct Block {
  double rho;
  double theta;  // 0 for a real eigenvalue
};

Matrix linear_series(const std::vector<Block>& blocks, std::size_t n, std::size_t columns, std::uint64_t seed) {
  std::size_t q = 0;
  for (const auto& b : blocks) q += b.theta == 0.0 ? 1 : 2;
  const Matrix phi = random_matrix(n, q, seed);
  CounterRng rng(seed + 1);
  std::vector<double> x(q);
  for (double& v : x) v = 1.0 + 0.5 * rng.next_uniform();
  Matrix y(n, columns);
  for (std::size_t k = 0; k < columns; ++k) {
    y.set_column(k, phi * x);
    std::size_t j = 0;
    for (const auto& b : blocks) {
      if (b.theta == 0.0) {
        x[j] *= b.rho;
        ++j;
      } else {
        const double c = b.rho * std::cos(b.theta), s = b.rho * std::sin(b.theta);
        const double x0 = x[j], x1 = x[j + 1];
        x[j] = c * x0 - s * x1;
        x[j + 1] = s * x0 + c * x1;
        j += 2;
      }
    }
  }
  return y;
}

std::vector<Complex> block_eigenvalues(const std::vector<Block>& blocks) {
  std::vector<Complex> out;
  for (const auto& b : blocks) {
    out.push_back(std::polar(b.rho, b.theta));
    if (b.theta != 0.0) out.push_back(std::polar(b.rho, -b.theta));
  }
  return out;
}

// Largest distance from each expected eigenvalue to its nearest fitted one.
double eigen_mismatch(const CVector& fitted, const std::vector<Complex>& expected) {
  double worst = 0.0;
  for (const auto& e : expected) {
    double best = HUGE_VAL;
    for (const auto& f : fitted) best = std::min(best, std::abs(f - e));
    worst = std::max(worst, best);
  }
  return worst;
}

double frob(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

std::vector<double> sample_times(const SnapshotMatrix& y) {
  std::vector<double> t;
  for (std::size_t k = 0; k < y.columns(); ++k) t.push_back(y.time(k));
  return t;
}

}  // namespace

TEST_CASE("split shapes") {
  const auto y = make_snapshots(random_matrix(4, 3, 1), 0.0, 1.0);
  const auto p = split(y);
  CHECK(p.y1 == y.data.column_range(0, 2));
  CHECK(p.y2 == y.data.column_range(1, 3));

  const auto two = make_snapshots(random_matrix(4, 2, 2), 0.0, 1.0);
  CHECK(split(two).y1.cols() == 1);
  CHECK_THROWS_AS(split(make_snapshots(random_matrix(4, 1, 3), 0.0, 1.0)), Error);

  CounterRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.next_u64() % 30;
    const auto s = split(make_snapshots(random_matrix(3, m, trial), 0.0, 0.5));
    CHECK(s.y1.cols() == s.y2.cols());
    CHECK(s.y1.cols() == m - 1);
  }
}

TEST_CASE("choose_rank") {
  const std::vector<double> a{3, 1};
  CHECK(choose_rank(a, 0.2) == 1);
  CHECK(std::abs(discarded_energy(a, 1) - 0.1) <= 1e-15);
  const std::vector<double> b{1, 0, 0};
  for (double tau : {0.0, 0.3, 0.9}) CHECK(choose_rank(b, tau) == 1);
  const std::vector<double> zero{0, 0};
  CHECK_THROWS_AS(choose_rank(zero, 0.1), Error);
  CHECK_THROWS_AS(choose_rank(a, 1.0), Error);

  // Exhaustive scan oracle with forward sums.
  CounterRng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng.next_u64() % 20;
    std::vector<double> sigma(len);
    for (double& s : sigma) s = std::pow(rng.next_uniform(), 3.0) * 10.0;
    std::sort(sigma.rbegin(), sigma.rend());
    const double tau = rng.next_uniform() * 0.5;
    long double total = 0.0L;
    for (double s : sigma) total += static_cast<long double>(s) * s;
    std::size_t oracle = len;
    long double kept = 0.0L;
    for (std::size_t r = 1; r <= len; ++r) {
      kept += static_cast<long double>(sigma[r - 1]) * sigma[r - 1];
      if (1.0L - kept / total <= tau) {
        oracle = r;
        break;
      }
    }
    CHECK(choose_rank(sigma, tau) == oracle);
    for (std::size_t r = 1; r < len; ++r) CHECK(discarded_energy(sigma, r + 1) <= discarded_energy(sigma, r));
  }
}

TEST_CASE("scalar geometric sequence") {
  Matrix data(1, 4);
  data(0, 0) = 1.0;
  data(0, 1) = 0.5;
  data(0, 2) = 0.25;
  data(0, 3) = 0.125;
  const auto y = make_snapshots(data, 0.0, 1.0);
  const auto model = fit(y, {FixedRank{1}});
  REQUIRE(model.rank() == 1);
  // A_tilde = Y2 Y1^T / |Y1|^2 = (0.5 + 0.125 + 0.03125) / (1 + 0.25 + 0.0625) = 0.5
  CHECK(std::abs(model.lambda[0] - Complex(0.5, 0.0)) <= 1e-15);
  CHECK(std::abs(model.omega[0] - Complex(std::log(0.5), 0.0)) <= 1e-15);
  CHECK_FALSE(model.aliased);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(evaluate(model, k).values[0] - data(0, k)) <= 1e-12);
  CHECK(std::abs(evaluate(model, 3.0).values[0] - 0.125) <= 1e-12);
  // Between samples the model follows lambda^t.
  for (double t : {0.3, 1.5, 2.75, 6.2}) CHECK(std::abs(evaluate(model, t).values[0] - std::pow(0.5, t)) <= 1e-12);
}

TEST_CASE("negative real eigenvalue is flagged as aliased") {
  Matrix data(1, 4);
  for (std::size_t k = 0; k < 4; ++k) data(0, k) = std::pow(-0.5, static_cast<double>(k));
  const auto model = fit(make_snapshots(data, 0.0, 1.0), {FixedRank{1}});
  CHECK(model.aliased);
  CHECK(std::abs(model.lambda[0] + 0.5) <= 1e-15);
  CHECK(std::abs(model.omega[0].imag() - std::numbers::pi) <= 1e-15);
  CHECK_FALSE(model.warnings.empty());
  // Integer sample times are still reproduced.
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(evaluate(model, k).values[0] - data(0, k)) <= 1e-12);
}

TEST_CASE("linear system with two real eigenvalues") {
  const std::vector<Block> blocks{{0.9, 0.0}, {0.7, 0.0}};
  const auto y = make_snapshots(linear_series(blocks, 5, 11, 10), 0.0, 1.0);
  const auto model = fit(y, {FixedRank{2}});
  CHECK(eigen_mismatch(model.lambda, block_eigenvalues(blocks)) <= 1e-8);
  const auto times = sample_times(y);
  const auto rec = reconstruct(model, times);
  CHECK(frob(rec - y.data) <= 1e-10 * frob(y.data));
}

TEST_CASE("oscillating system: recovery, extrapolation and real output") {
  const std::vector<Block> blocks{{0.95, 0.0}, {0.8, 0.0}, {0.6, 0.4}};
  const std::size_t train = 41, extra = 10;
  const Matrix all = linear_series(blocks, 200, train + extra, 21);
  const auto y = make_snapshots(all.column_range(0, train), 2.0, 0.5);
  const auto model = fit(y, {FixedRank{4}});
  CHECK(eigen_mismatch(model.lambda, block_eigenvalues(blocks)) <= 1e-8);
  CHECK(std::abs(model.omega[0] - std::log(model.lambda[0]) / 0.5) <= 1e-14);

  const auto rec = reconstruct(model, sample_times(y));
  CHECK(errors(y.data, rec, train).eta_f <= 1e-8);
  for (std::size_t k = train; k < train + extra; ++k) {
    const auto e = evaluate(model, y.time(k));
    const auto truth = all.column(k);
    std::vector<double> d(truth.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = e.values[i] - truth[i];
    CHECK(linalg::norm2(d) <= 1e-6 * linalg::norm2(truth));
    CHECK(e.imaginary_norm <= 1e-8 * linalg::norm2(e.values));
  }
}

TEST_CASE("amplitudes solve the first-snapshot least-squares problem") {
  // Noisy data: u0 is not in the span of the modes, so the normal equations matter.
  Matrix data = linear_series({{0.9, 0.0}, {0.5, 0.3}, {0.7, 0.0}}, 30, 12, 31);
  const Matrix noise = random_matrix(30, 12, 32);
  for (std::size_t i = 0; i < data.data().size(); ++i) data.data()[i] += 1e-3 * noise.data()[i];
  const auto model = fit(make_snapshots(data, 0.0, 1.0), {FixedRank{3}});
  const auto u0 = data.column(0);
  CVector r(u0.size());
  const CVector psib = model.modes * model.amplitudes;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = psib[i] - u0[i];
  double worst = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < model.rank(); ++j) {
    Complex g = 0.0;
    double col = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      g += std::conj(model.modes(i, j)) * r[i];
      col += std::norm(model.modes(i, j));
    }
    worst = std::max(worst, std::abs(g));
    scale = std::max(scale, std::sqrt(col) * linalg::norm2(u0));
  }
  CHECK(worst <= 1e-8 * scale);

  // Least-squares amplitudes over all snapshots never do worse on the training window.
  const auto y = make_snapshots(data, 0.0, 1.0);
  FitOptions all;
  all.rank = FixedRank{3};
  all.least_squares_amplitudes = true;
  const auto ls = fit(y, all);
  const auto times = sample_times(y);
  CHECK(errors(data, reconstruct(ls, times), 12).eta_f <= errors(data, reconstruct(model, times), 12).eta_f + 1e-12);
}

TEST_CASE("reconstruction is invariant under mode rescaling") {
  const auto y = make_snapshots(linear_series({{0.9, 0.0}, {0.6, 0.5}}, 40, 15, 41), 0.0, 1.0);
  const auto model = fit(y, {FixedRank{3}});
  DmdModel scaled = model;
  CounterRng rng(42);
  for (std::size_t j = 0; j < model.rank(); ++j) {
    const Complex c = std::polar(0.1 + 10.0 * rng.next_uniform(), 6.0 * rng.next_uniform());
    for (std::size_t i = 0; i < model.n; ++i) scaled.modes(i, j) *= c;
    scaled.amplitudes[j] /= c;
  }
  const auto times = sample_times(y);
  const Matrix a = reconstruct(model, times), b = reconstruct(scaled, times);
  CHECK(frob(a - b) <= 1e-12 * frob(a));
}

TEST_CASE("eigenvalues are invariant under orthogonal change of basis") {
  const Matrix data = linear_series({{0.97, 0.0}, {0.8, 0.2}, {0.5, 0.0}}, 25, 20, 51);
  const Matrix q = linalg::householder_qr(random_matrix(25, 25, 52)).q;
  const auto a = fit(make_snapshots(data, 0.0, 1.0), {FixedRank{4}});
  const auto b = fit(make_snapshots(q * data, 0.0, 1.0), {FixedRank{4}});
  std::vector<Complex> expect(a.lambda.begin(), a.lambda.end());
  CHECK(eigen_mismatch(b.lambda, expect) <= 1e-9);
}

TEST_CASE("reconstruction error is nonincreasing over nested ranks") {
  const std::vector<Block> blocks{{0.99, 0.0}, {0.9, 0.0}, {0.8, 0.3}, {0.6, 0.0}, {0.4, 0.0}};
  const auto y = make_snapshots(linear_series(blocks, 30, 25, 61), 0.0, 1.0);
  const auto times = sample_times(y);
  double previous = HUGE_VAL;
  for (std::size_t r = 1; r <= 6; ++r) {
    const double eta = errors(y.data, reconstruct(fit(y, {FixedRank{r}}), times), 25).eta_f;
    CHECK(eta <= previous + 1e-12);
    previous = eta;
  }
  CHECK(previous <= 1e-8);
}

TEST_CASE("exact and randomized SVD paths agree at exact rank") {
  const std::vector<Block> blocks{{0.95, 0.0}, {0.85, 0.25}, {0.5, 0.0}};
  const auto y = make_snapshots(linear_series(blocks, 60, 30, 71), 0.0, 1.0);
  FitOptions exact{FixedRank{4}, ExactSvd{}};
  FitOptions randomized{FixedRank{4}, RandomizedSvd{9, 10, 2}};
  const auto a = fit(y, exact);
  const auto b = fit(y, randomized);
  std::vector<Complex> expect(a.lambda.begin(), a.lambda.end());
  CHECK(eigen_mismatch(b.lambda, expect) <= 1e-6);
  // Bit-identical on repeat.
  const auto c = fit(y, randomized);
  CHECK(c.lambda == b.lambda);
  CHECK(c.amplitudes == b.amplitudes);

  // Threshold rank through both paths.
  const auto t = fit(y, {EnergyThreshold{1e-12}, ExactSvd{}});
  CHECK(t.rank() == 4);
  const auto tr = fit(y, {EnergyThreshold{1e-12}, RandomizedSvd{9, 10, 2}});
  CHECK(tr.rank() == 4);
}

TEST_CASE("rank handling and fit errors") {
  const auto y = make_snapshots(linear_series({{0.9, 0.0}, {0.5, 0.0}}, 10, 8, 81), 0.0, 1.0);
  // Data of rank 2: asking for 5 keeps only the modes with usable singular values.
  const auto over = fit(y, {FixedRank{5}});
  CHECK(over.rank() == 2);
  CHECK_FALSE(over.warnings.empty());

  try {
    fit(y, {FixedRank{8}});
    FAIL("expected invalid argument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
  CHECK_THROWS_AS(fit(y.window(0, 2), {FixedRank{1}}), Error);
  try {
    fit(make_snapshots(Matrix(4, 5, 0.0), 0.0, 1.0), {FixedRank{1}});
    FAIL("expected fit error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fit);
  }
  CHECK_THROWS_AS(make_snapshots(Matrix(3, 3, 1.0), 0.0, 0.0), Error);
}

TEST_CASE("training window shifts the start time") {
  const Matrix data = linear_series({{0.9, 0.0}}, 6, 20, 91);
  const auto y = make_snapshots(data, 0.0, 0.25);
  const auto w = y.window(12, 20);
  CHECK(w.t0 == 3.0);
  const auto model = fit(w, {FixedRank{1}});
  CHECK(model.t0 == 3.0);
  // Backward in time the model still follows the linear recurrence.
  const auto back = evaluate(model, 0.0).values;
  std::vector<double> d(back.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = back[i] - data(i, 0);
  CHECK(linalg::norm2(d) <= 1e-9 * linalg::norm2(data.column(0)));
}

TEST_CASE("error report") {
  const Matrix truth = random_matrix(7, 6, 101);
  const Matrix approx = random_matrix(7, 6, 102);
  const auto same = errors(truth, truth, 3);
  CHECK(same.eta_f == 0.0);
  for (const auto& e : same.eta) CHECK(*e == 0.0);
  const auto none = errors(truth, Matrix(7, 6, 0.0), 3);
  for (const auto& e : none.eta) CHECK(std::abs(*e - 1.0) <= 1e-15);
  CHECK(std::abs(none.eta_f - 1.0) <= 1e-15);

  const auto rep = errors(truth, approx, 4);
  CHECK(rep.split == 4);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    const auto t = truth.column(k), a = approx.column(k);
    double e2 = 0.0, u2 = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      e2 += (t[i] - a[i]) * (t[i] - a[i]);
      u2 += t[i] * t[i];
    }
    CHECK(std::abs(*rep.eta[k] - std::sqrt(e2 / u2)) <= 1e-14);
    num += e2;
    den += u2;
  }
  CHECK(std::abs(rep.eta_f * rep.eta_f - num / den) <= 1e-14);

  Matrix with_zero = truth;
  for (std::size_t i = 0; i < 7; ++i) with_zero(i, 2) = 0.0;
  CHECK_FALSE(errors(with_zero, approx, 0).eta[2].has_value());
  CHECK_THROWS_AS(errors(truth, random_matrix(7, 5, 1), 0), Error);
}

TEST_CASE("model file round trip") {
  const auto y = make_snapshots(linear_series({{0.95, 0.0}, {0.7, 0.6}}, 12, 10, 111), 1.5, 0.25, "e");
  const auto model = fit(y, {FixedRank{3}});
  const auto path = std::filesystem::temp_directory_path() / "amrdmd_test_model.dmd.txt";
  write_model(path, model);
  const auto back = read_model(path);
  CHECK(back.n == model.n);
  CHECK(back.t0 == model.t0);
  CHECK(back.dt == model.dt);
  CHECK(back.field_name == "e");
  CHECK(back.lambda == model.lambda);
  CHECK(back.omega == model.omega);
  CHECK(back.amplitudes == model.amplitudes);
  for (std::size_t j = 0; j < model.rank(); ++j)
    for (std::size_t i = 0; i < model.n; ++i) CHECK(back.modes(i, j) == model.modes(i, j));
  std::filesystem::remove(path);
}
