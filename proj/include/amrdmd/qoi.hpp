#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "amrdmd/fem.hpp"

namespace amrdmd::qoi {

using fem::FeField;
using mesh::Point;

struct QoiSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string kind;
  // Values were divided by this (1 when not normalized).
  double reference = 1.0;
};

// Compartment name -> field, all on one mesh.
using FieldSet = std::map<std::string, FeField>;

// (int s + int e + int i + int r + int d) / |Omega|; c is not included.
double population_density(const FieldSet& fields);

// population_density per snapshot divided by its value at the first one.
QoiSeries total_population(const std::vector<double>& times, const std::vector<FieldSet>& snapshots);

// Largest coordinate along `axis` of any point where the P1 field is at least
// `threshold`. Returns the domain minimum along the axis when no point qualifies.
double front_position(const FeField& field, double threshold, int axis = 0);

// Measure and centroid of {u >= threshold}, cut element by element along the
// linear zero set of u - threshold.
struct Region {
  double measure = 0.0;
  Point centroid{0.0, 0.0};
};

Region threshold_region(const FeField& field, double threshold);

// Throws undefined-region when the region has zero measure.
Point region_center_of_mass(const FeField& field, double threshold);

void write_csv(const std::filesystem::path& path, const QoiSeries& series);
QoiSeries read_csv(const std::filesystem::path& path);

}  // namespace amrdmd::qoi
