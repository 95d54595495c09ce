#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "amrdmd/fem.hpp"
#include "amrdmd/linalg.hpp"

namespace amrdmd::dmd {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::Matrix;

// Snapshots as columns, sampled uniformly from t0 with spacing dt.
struct SnapshotMatrix {
  Matrix data;
  double t0 = 0.0;
  double dt = 1.0;
  std::string field_name;
  fem::MeshPtr mesh;  // optional; all columns live on it when set

  std::size_t rows() const { return data.rows(); }
  std::size_t columns() const { return data.cols(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }

  void check() const;
  // Columns [first, last) with t0 shifted accordingly.
  SnapshotMatrix window(std::size_t first, std::size_t last) const;
};

SnapshotMatrix make_snapshots(Matrix data, double t0, double dt, std::string field_name = "u",
                              fem::MeshPtr mesh = nullptr);

struct SplitPair {
  Matrix y1;
  Matrix y2;
};

SplitPair split(const SnapshotMatrix& y);

// Discarded energy fraction 1 - sum_{i<r} s_i^2 / sum s_i^2.
double discarded_energy(std::span<const double> sigma, std::size_t r);
std::size_t choose_rank(std::span<const double> sigma, double tau);

struct FixedRank {
  std::size_t r = 1;
};
struct EnergyThreshold {
  double tau = 0.0;
};
using RankSpec = std::variant<FixedRank, EnergyThreshold>;

struct ExactSvd {};
struct RandomizedSvd {
  std::uint64_t seed = 0;
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
};
using SvdMethod = std::variant<ExactSvd, RandomizedSvd>;

struct FitOptions {
  RankSpec rank = FixedRank{};
  SvdMethod svd = ExactSvd{};
  // Fit b against every training snapshot instead of the first one only.
  bool least_squares_amplitudes = false;
};

struct DmdModel {
  std::size_t n = 0;
  CVector lambda;
  CVector omega;
  CMatrix modes;  // n x r, columns paired with lambda
  CVector amplitudes;
  double t0 = 0.0;
  double dt = 1.0;
  std::string field_name = "u";
  // Set when some retained eigenvalue lies on the negative real axis, where
  // the principal logarithm folds the mode onto the Nyquist frequency.
  bool aliased = false;
  std::vector<std::string> warnings;

  std::size_t rank() const { return lambda.size(); }
};

DmdModel fit(const SnapshotMatrix& y, const FitOptions& options = {});

struct Evaluation {
  linalg::Vector values;  // real part
  double imaginary_norm = 0.0;
};

Evaluation evaluate(const DmdModel& model, double t);
// One column per requested time.
Matrix reconstruct(const DmdModel& model, std::span<const double> times);

struct ErrorReport {
  // Undefined (nullopt) where the truth column is zero.
  std::vector<std::optional<double>> eta;
  double eta_f = 0.0;
  std::size_t split = 0;  // first column of the prediction regime
};

ErrorReport errors(const Matrix& truth, const Matrix& approx, std::size_t split_index);

void write_model(const std::filesystem::path& path, const DmdModel& model);
DmdModel read_model(const std::filesystem::path& path);

}  // namespace amrdmd::dmd
