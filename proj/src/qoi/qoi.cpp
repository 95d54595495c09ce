#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/qoi.hpp"

namespace amrdmd::qoi {

using mesh::Index;

double population_density(const FieldSet& fields) {
  const mesh::SimplicialMesh* m = nullptr;
  double total = 0.0;
  for (const char* name : {"s", "e", "i", "r", "d"}) {
    const auto it = fields.find(name);
    if (it == fields.end()) fail(ErrorKind::invalid_argument, std::string("population: missing compartment '") + name + "'");
    it->second.check();
    if (!m) m = it->second.mesh.get();
    require(it->second.mesh.get() == m || it->second.mesh->same_geometry(*m),
            "population: compartments live on different meshes");
    total += fem::integrate(it->second);
  }
  return total / m->total_measure();
}

QoiSeries total_population(const std::vector<double>& times, const std::vector<FieldSet>& snapshots) {
  require(times.size() == snapshots.size(), "total_population: times and snapshots differ in length");
  require(!snapshots.empty(), "total_population: no snapshots");
  QoiSeries out;
  out.kind = "population";
  out.times = times;
  for (const auto& s : snapshots) out.values.push_back(population_density(s));
  out.reference = out.values.front();
  require(out.reference != 0.0, "total_population: first snapshot has zero population");
  for (double& v : out.values) v /= out.reference;
  return out;
}

namespace {

// Vertices of the polytope {u >= t} within element e: qualifying vertices plus
// edge crossings, in cyclic order for triangles.
std::vector<Point> clipped_polygon(const FeField& f, Index e, double t) {
  const mesh::SimplicialMesh& m = *f.mesh;
  const auto nodes = m.element_nodes(e);
  const std::size_t nv = nodes.size();
  std::vector<Point> out;
  const auto crossing = [&](std::size_t a, std::size_t b) {
    const double ua = f.values[nodes[a]], ub = f.values[nodes[b]];
    const double s = (t - ua) / (ub - ua);
    const Point& pa = m.node(nodes[a]);
    const Point& pb = m.node(nodes[b]);
    return Point{pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])};
  };
  if (nv == 2) {
    const bool in0 = f.values[nodes[0]] >= t, in1 = f.values[nodes[1]] >= t;
    if (in0) out.push_back(m.node(nodes[0]));
    if (in0 != in1) out.push_back(crossing(0, 1));
    if (in1) out.push_back(m.node(nodes[1]));
    return out;
  }
  // Sutherland-Hodgman against a single half-plane.
  for (std::size_t k = 0; k < nv; ++k) {
    const std::size_t next = (k + 1) % nv;
    const bool in_a = f.values[nodes[k]] >= t, in_b = f.values[nodes[next]] >= t;
    if (in_a) out.push_back(m.node(nodes[k]));
    if (in_a != in_b) out.push_back(crossing(k, next));
  }
  return out;
}

}  // namespace

double front_position(const FeField& field, double threshold, int axis) {
  field.check();
  require(axis >= 0 && axis < field.mesh->dim(), "front_position: axis out of range");
  const auto box = field.mesh->bounding_box();
  bool found = false;
  double best = box[0][axis];
  for (std::size_t e = 0; e < field.mesh->num_elements(); ++e) {
    for (const Point& p : clipped_polygon(field, static_cast<Index>(e), threshold)) {
      if (!found || p[axis] > best) best = p[axis];
      found = true;
    }
  }
  return best;
}

Region threshold_region(const FeField& field, double threshold) {
  field.check();
  Region r;
  double mx = 0.0, my = 0.0;
  for (std::size_t e = 0; e < field.mesh->num_elements(); ++e) {
    const auto poly = clipped_polygon(field, static_cast<Index>(e), threshold);
    if (field.mesh->dim() == 1) {
      if (poly.size() < 2) continue;
      const double len = std::abs(poly[1][0] - poly[0][0]);
      r.measure += len;
      mx += len * 0.5 * (poly[0][0] + poly[1][0]);
      continue;
    }
    if (poly.size() < 3) continue;
    // Shoelace area and first moments.
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point& p = poly[k];
      const Point& q = poly[(k + 1) % poly.size()];
      const double cross = p[0] * q[1] - q[0] * p[1];
      a += cross;
      cx += (p[0] + q[0]) * cross;
      cy += (p[1] + q[1]) * cross;
    }
    r.measure += 0.5 * std::abs(a);
    const double sign = a < 0.0 ? -1.0 : 1.0;
    mx += sign * cx / 6.0;
    my += sign * cy / 6.0;
  }
  if (r.measure > 0.0) r.centroid = {mx / r.measure, my / r.measure};
  return r;
}

Point region_center_of_mass(const FeField& field, double threshold) {
  const Region r = threshold_region(field, threshold);
  if (!(r.measure > 0.0))
    fail(ErrorKind::undefined_region, "center of mass: field '" + field.name + "' never reaches the threshold");
  return r.centroid;
}

void write_csv(const std::filesystem::path& path, const QoiSeries& series) {
  require(series.times.size() == series.values.size(), "write_csv: length mismatch");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "time,value\n";
  for (std::size_t k = 0; k < series.times.size(); ++k) out << series.times[k] << ',' << series.values[k] << '\n';
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

QoiSeries read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "time,value") fail(ErrorKind::parse, path.string() + ": bad header");
  QoiSeries s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0, v = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> v) || comma != ',')
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": malformed row");
    s.times.push_back(t);
    s.values.push_back(v);
  }
  return s;
}

}  // namespace amrdmd::qoi
