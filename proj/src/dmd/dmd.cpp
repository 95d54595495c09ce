#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "amrdmd/dmd.hpp"
#include "amrdmd/error.hpp"

namespace amrdmd::dmd {

void SnapshotMatrix::check() const {
  require(data.rows() >= 1 && data.cols() >= 1, "snapshot matrix is empty");
  require(dt > 0.0 && std::isfinite(dt), "snapshot matrix: sampling interval must be positive");
  require(std::isfinite(t0), "snapshot matrix: non-finite start time");
  for (double v : data.data()) require(std::isfinite(v), "snapshot matrix '" + field_name + "' has a non-finite entry");
  if (mesh)
    require(mesh->num_nodes() == data.rows(), "snapshot matrix '" + field_name + "' does not match its mesh");
}

SnapshotMatrix SnapshotMatrix::window(std::size_t first, std::size_t last) const {
  require(first < last && last <= columns(), "snapshot window out of range");
  return SnapshotMatrix{data.column_range(first, last), time(first), dt, field_name, mesh};
}

SnapshotMatrix make_snapshots(Matrix data, double t0, double dt, std::string field_name, fem::MeshPtr mesh) {
  SnapshotMatrix y{std::move(data), t0, dt, std::move(field_name), std::move(mesh)};
  y.check();
  return y;
}

SplitPair split(const SnapshotMatrix& y) {
  require(y.columns() >= 2, "split: need at least two snapshots");
  return {y.data.column_range(0, y.columns() - 1), y.data.column_range(1, y.columns())};
}

namespace {

// tail[r] = sum_{i >= r} sigma_i^2, accumulated from the back so the sequence
// is monotone in floating point and exactly zero past the last nonzero value.
std::vector<double> tail_energy(std::span<const double> sigma) {
  std::vector<double> tail(sigma.size() + 1, 0.0);
  for (std::size_t i = sigma.size(); i-- > 0;) {
    require(sigma[i] >= 0.0 && std::isfinite(sigma[i]), "singular values must be finite and nonnegative");
    tail[i] = tail[i + 1] + sigma[i] * sigma[i];
  }
  if (!(tail[0] > 0.0)) fail(ErrorKind::invalid_argument, "all singular values are zero (zero data)");
  return tail;
}

}  // namespace

double discarded_energy(std::span<const double> sigma, std::size_t r) {
  require(!sigma.empty(), "discarded_energy: empty spectrum");
  const auto tail = tail_energy(sigma);
  return tail[std::min(r, sigma.size())] / tail[0];
}

std::size_t choose_rank(std::span<const double> sigma, double tau) {
  require(!sigma.empty(), "choose_rank: empty spectrum");
  require(tau >= 0.0 && tau < 1.0, "choose_rank: tau must lie in [0, 1)");
  const auto tail = tail_energy(sigma);
  for (std::size_t r = 1; r < sigma.size(); ++r)
    if (tail[r] / tail[0] <= tau) return r;
  return sigma.size();
}

namespace {

linalg::SvdResult decompose(const Matrix& y1, const FitOptions& options, std::size_t& r) {
  const std::size_t k = std::min(y1.rows(), y1.cols());
  const auto* fixed = std::get_if<FixedRank>(&options.rank);
  if (fixed) {
    require(fixed->r >= 1, "fit: rank must be at least 1");
    if (fixed->r > k)
      fail(ErrorKind::invalid_argument,
           "fit: rank " + std::to_string(fixed->r) + " exceeds min(n, m) = " + std::to_string(k));
  }

  linalg::SvdResult s;
  if (const auto* rs = std::get_if<RandomizedSvd>(&options.svd)) {
    linalg::RsvdOptions ro;
    ro.seed = rs->seed;
    ro.power_iterations = rs->power_iterations;
    if (fixed) {
      ro.rank = fixed->r;
      ro.oversample = std::min(rs->oversample, k - fixed->r);
    } else {
      ro.oversample = std::min(rs->oversample, k - 1);
      ro.rank = k - ro.oversample;
    }
    s = linalg::randomized_svd(y1, ro);
  } else {
    s = linalg::svd(y1);
  }
  if (s.sigma.empty() || !(s.sigma[0] > 0.0)) fail(ErrorKind::fit, "fit: snapshot data has zero rank");

  r = fixed ? fixed->r : choose_rank(s.sigma, std::get<EnergyThreshold>(options.rank).tau);
  return s;
}

}  // namespace

DmdModel fit(const SnapshotMatrix& y, const FitOptions& options) {
  y.check();
  require(y.columns() >= 3, "fit: need at least three snapshots");
  const SplitPair pair = split(y);
  const std::size_t n = y.rows();

  DmdModel model;
  model.n = n;
  model.t0 = y.t0;
  model.dt = y.dt;
  model.field_name = y.field_name.empty() ? "u" : y.field_name;

  std::size_t r = 0;
  const linalg::SvdResult s = decompose(pair.y1, options, r);
  while (r > 1 && !(s.sigma[r - 1] > 1e-12 * s.sigma[0])) --r;
  if (options.rank.index() == 0 && r < std::get<FixedRank>(options.rank).r)
    model.warnings.push_back("rank reduced to " + std::to_string(r) + " (tiny singular values)");

  // B = Y2 V_r diag(1/sigma), then A_tilde = U_r^T B.
  Matrix vr(pair.y1.cols(), r);
  for (std::size_t i = 0; i < vr.rows(); ++i)
    for (std::size_t j = 0; j < r; ++j) vr(i, j) = s.v(i, j) / s.sigma[j];
  const Matrix b = pair.y2 * vr;
  Matrix ur(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) ur(i, j) = s.u(i, j);
  const Matrix a_tilde = linalg::multiply_tn(ur, b);

  linalg::EigResult eig;
  try {
    eig = linalg::eig(a_tilde);
  } catch (const Error& e) {
    fail(ErrorKind::fit, std::string("fit: eigendecomposition failed: ") + e.what());
  }

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < eig.values.size(); ++j) {
    if (std::abs(eig.values[j]) < 1e-14) {
      model.warnings.push_back("dropped mode " + std::to_string(j) + " with |lambda| < 1e-14");
      continue;
    }
    keep.push_back(j);
  }
  if (keep.empty()) fail(ErrorKind::fit, "fit: no mode with nonzero eigenvalue");

  const CMatrix psi_all = CMatrix(b) * eig.vectors;
  model.modes = CMatrix(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const Complex lam = eig.values[keep[c]];
    model.lambda.push_back(lam);
    model.omega.push_back(std::log(lam) / y.dt);
    if (lam.imag() == 0.0 && lam.real() < 0.0) model.aliased = true;
    for (std::size_t i = 0; i < n; ++i) model.modes(i, c) = psi_all(i, keep[c]);
  }
  if (model.aliased) model.warnings.push_back("negative real eigenvalue: mode aliases at the Nyquist frequency");

  const std::size_t rr = keep.size();
  if (!options.least_squares_amplitudes) {
    const linalg::Vector u0 = y.data.column(0);
    const CVector u0c(u0.begin(), u0.end());
    model.amplitudes = linalg::pinv_apply(model.modes, u0c);
  } else {
    // Stacked system [Psi; Psi L; Psi L^2; ...] b = [u_0; u_1; ...].
    const std::size_t cols = y.columns();
    CMatrix stacked(n * cols, rr);
    CVector rhs(n * cols);
    for (std::size_t k = 0; k < cols; ++k) {
      for (std::size_t j = 0; j < rr; ++j) {
        const Complex p = std::pow(model.lambda[j], static_cast<double>(k));
        for (std::size_t i = 0; i < n; ++i) stacked(k * n + i, j) = model.modes(i, j) * p;
      }
      for (std::size_t i = 0; i < n; ++i) rhs[k * n + i] = y.data(i, k);
    }
    model.amplitudes = linalg::pinv_apply(stacked, rhs);
  }
  for (const Complex& z : model.amplitudes)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) fail(ErrorKind::fit, "fit: non-finite amplitudes");
  return model;
}

Evaluation evaluate(const DmdModel& model, double t) {
  require(std::isfinite(t), "evaluate: non-finite time");
  const double tau = t - model.t0;
  CVector coeff(model.rank());
  for (std::size_t j = 0; j < model.rank(); ++j) coeff[j] = std::exp(model.omega[j] * tau) * model.amplitudes[j];
  const CVector u = model.modes * coeff;
  Evaluation out;
  out.values.resize(u.size());
  double im = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.values[i] = u[i].real();
    im += u[i].imag() * u[i].imag();
  }
  out.imaginary_norm = std::sqrt(im);
  return out;
}

Matrix reconstruct(const DmdModel& model, std::span<const double> times) {
  Matrix out(model.n, times.size());
  for (std::size_t k = 0; k < times.size(); ++k) out.set_column(k, evaluate(model, times[k]).values);
  return out;
}

ErrorReport errors(const Matrix& truth, const Matrix& approx, std::size_t split_index) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols())
    fail(ErrorKind::invalid_argument, "errors: shape mismatch");
  require(split_index <= truth.cols(), "errors: split index out of range");
  ErrorReport report;
  report.split = split_index;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < truth.cols(); ++k) {
    double e2 = 0.0, u2 = 0.0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
      const double d = truth(i, k) - approx(i, k);
      e2 += d * d;
      u2 += truth(i, k) * truth(i, k);
    }
    num += e2;
    den += u2;
    report.eta.push_back(u2 > 0.0 ? std::optional<double>(std::sqrt(e2 / u2)) : std::nullopt);
  }
  if (den > 0.0)
    report.eta_f = std::sqrt(num / den);
  else
    report.eta_f = num > 0.0 ? HUGE_VAL : 0.0;
  return report;
}

namespace {

void write_complex(std::ostream& out, const Complex& z) { out << z.real() << ' ' << z.imag() << '\n'; }

Complex read_complex(std::istream& in, const std::string& where) {
  double re = 0.0, im = 0.0;
  if (!(in >> re >> im)) fail(ErrorKind::parse, "model file: truncated " + where);
  return {re, im};
}

void expect(std::istream& in, const std::string& key, const std::string& path) {
  std::string word;
  if (!(in >> word) || word != key) fail(ErrorKind::parse, path + ": expected '" + key + "'");
}

}  // namespace

void write_model(const std::filesystem::path& path, const DmdModel& model) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << "n " << model.n << '\n'
      << "r " << model.rank() << '\n'
      << "t0 " << model.t0 << '\n'
      << "dt_o " << model.dt << '\n'
      << "field " << model.field_name << '\n'
      << "aliased " << (model.aliased ? 1 : 0) << '\n';
  out << "lambda\n";
  for (const auto& z : model.lambda) write_complex(out, z);
  out << "omega\n";
  for (const auto& z : model.omega) write_complex(out, z);
  out << "amplitudes\n";
  for (const auto& z : model.amplitudes) write_complex(out, z);
  out << "modes\n";
  for (std::size_t j = 0; j < model.rank(); ++j)
    for (std::size_t i = 0; i < model.n; ++i) write_complex(out, model.modes(i, j));
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

DmdModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open model file " + path.string());
  const std::string p = path.string();
  DmdModel m;
  std::size_t r = 0;
  int aliased = 0;
  expect(in, "n", p);
  in >> m.n;
  expect(in, "r", p);
  in >> r;
  expect(in, "t0", p);
  in >> m.t0;
  expect(in, "dt_o", p);
  in >> m.dt;
  expect(in, "field", p);
  in >> m.field_name;
  expect(in, "aliased", p);
  in >> aliased;
  if (!in || m.n == 0 || r == 0 || !(m.dt > 0.0)) fail(ErrorKind::parse, p + ": bad header");
  m.aliased = aliased != 0;
  expect(in, "lambda", p);
  for (std::size_t j = 0; j < r; ++j) m.lambda.push_back(read_complex(in, "lambda"));
  expect(in, "omega", p);
  for (std::size_t j = 0; j < r; ++j) m.omega.push_back(read_complex(in, "omega"));
  expect(in, "amplitudes", p);
  for (std::size_t j = 0; j < r; ++j) m.amplitudes.push_back(read_complex(in, "amplitudes"));
  expect(in, "modes", p);
  m.modes = CMatrix(m.n, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < m.n; ++i) m.modes(i, j) = read_complex(in, "modes");
  return m;
}

}  // namespace amrdmd::dmd
