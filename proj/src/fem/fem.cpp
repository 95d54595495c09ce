#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/fem.hpp"

namespace amrdmd::fem {

void FeField::check() const {
  require(mesh != nullptr, "field '" + name + "' has no mesh");
  require(values.size() == mesh->num_nodes(),
          "field '" + name + "' has " + std::to_string(values.size()) + " values for " +
              std::to_string(mesh->num_nodes()) + " nodes");
  for (double v : values) require(std::isfinite(v), "field '" + name + "' has a non-finite value");
}

FeField make_field(MeshPtr mesh, std::vector<double> values, std::string name) {
  FeField f{std::move(mesh), std::move(values), std::move(name)};
  f.check();
  return f;
}

Point to_physical(const SimplicialMesh& mesh, Index e, const std::array<double, 3>& lambda) {
  Point x{0.0, 0.0};
  const auto nodes = mesh.element_nodes(e);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    x[0] += lambda[k] * mesh.node(nodes[k])[0];
    x[1] += lambda[k] * mesh.node(nodes[k])[1];
  }
  return x;
}

std::array<Point, 3> shape_gradients(const SimplicialMesh& mesh, Index e) {
  const auto& c = mesh.element(e);
  if (mesh.dim() == 1) {
    const double h = mesh.node(c[1])[0] - mesh.node(c[0])[0];
    return {Point{-1.0 / h, 0.0}, Point{1.0 / h, 0.0}, Point{0.0, 0.0}};
  }
  const Point& a = mesh.node(c[0]);
  const Point& b = mesh.node(c[1]);
  const Point& d = mesh.node(c[2]);
  const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
  return {Point{(b[1] - d[1]) / det, (d[0] - b[0]) / det},
          Point{(d[1] - a[1]) / det, (a[0] - d[0]) / det},
          Point{(a[1] - b[1]) / det, (b[0] - a[0]) / det}};
}

std::array<std::array<double, 3>, 3> element_mass(const SimplicialMesh& mesh, Index e) {
  const QuadratureRule rule = quadrature(mesh.dim(), 2);
  const double scale = mesh.measure(e) / rule.reference_measure();
  const int nv = mesh.vertices_per_element();
  std::array<std::array<double, 3>, 3> m{};
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& l = rule.points[q];
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) m[i][j] += rule.weights[q] * scale * l[i] * l[j];
  }
  return m;
}

SparseSpd assemble_mass(const SimplicialMesh& mesh) {
  std::vector<Triplet> triplets;
  const int nv = mesh.vertices_per_element();
  triplets.reserve(mesh.num_elements() * static_cast<std::size_t>(nv * nv));
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto id = static_cast<Index>(e);
    const double m = mesh.measure(id);
    if (!(m > 0.0) || !std::isfinite(m))
      fail(ErrorKind::assembly, "assemble_mass: element " + std::to_string(e) + " is degenerate");
    const auto local = element_mass(mesh, id);
    const auto nodes = mesh.element_nodes(id);
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j) triplets.push_back({nodes[i], nodes[j], local[i][j]});
  }
  return SparseSpd(CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), std::move(triplets)));
}

double evaluate(const FeField& field, const mesh::PointLocator& locator, const Point& x) {
  const auto loc = locator.locate(x);
  const auto nodes = field.mesh->element_nodes(loc.element);
  double v = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) v += loc.barycentric[k] * field.values[nodes[k]];
  return v;
}

double evaluate(const FeField& field, const Point& x) {
  field.check();
  const mesh::PointLocator locator(*field.mesh);
  return evaluate(field, locator, x);
}

namespace {

// Sum over elements of the quadrature of f(u_h) with a degree-2 rule.
template <class F>
double integrate_with(const FeField& field, F f) {
  field.check();
  const SimplicialMesh& m = *field.mesh;
  const QuadratureRule rule = quadrature(m.dim(), 2);
  double total = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto id = static_cast<Index>(e);
    const auto nodes = m.element_nodes(id);
    double local = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      double u = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) u += rule.points[q][k] * field.values[nodes[k]];
      local += rule.weights[q] * f(u);
    }
    total += local * m.measure(id) / rule.reference_measure();
  }
  return total;
}

}  // namespace

double integrate(const FeField& field) {
  return integrate_with(field, [](double u) { return u; });
}

double l2_norm(const FeField& field) {
  return std::sqrt(integrate_with(field, [](double u) { return u * u; }));
}

double inf_norm(const FeField& field) {
  field.check();
  double m = 0.0;
  for (double v : field.values) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> flux_jump_indicator(const FeField& field) {
  field.check();
  const SimplicialMesh& m = *field.mesh;
  const std::size_t n_elem = m.num_elements();

  std::vector<Point> grad(n_elem);
  for (std::size_t e = 0; e < n_elem; ++e) {
    const auto id = static_cast<Index>(e);
    const auto g = shape_gradients(m, id);
    const auto nodes = m.element_nodes(id);
    Point s{0.0, 0.0};
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      s[0] += g[k][0] * field.values[nodes[k]];
      s[1] += g[k][1] * field.values[nodes[k]];
    }
    grad[e] = s;
  }

  // Facet -> incident elements.
  std::map<std::pair<Index, Index>, std::vector<Index>> facets;
  for (std::size_t e = 0; e < n_elem; ++e) {
    const auto& c = m.element(static_cast<Index>(e));
    if (m.dim() == 1) {
      facets[{c[0], -1}].push_back(static_cast<Index>(e));
      facets[{c[1], -1}].push_back(static_cast<Index>(e));
    } else {
      for (int k = 0; k < 3; ++k)
        facets[{std::min(c[k], c[(k + 1) % 3]), std::max(c[k], c[(k + 1) % 3])}].push_back(
            static_cast<Index>(e));
    }
  }

  std::vector<double> sum(n_elem, 0.0);
  for (const auto& [facet, elems] : facets) {
    if (elems.size() != 2) continue;  // boundary facets contribute nothing
    const Index e1 = elems[0], e2 = elems[1];
    double contribution;
    if (m.dim() == 1) {
      const double jump = grad[e1][0] - grad[e2][0];
      const double h = 0.5 * (m.measure(e1) + m.measure(e2));
      contribution = h * jump * jump;
    } else {
      const Point& a = m.node(facet.first);
      const Point& b = m.node(facet.second);
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      const Point normal{(b[1] - a[1]) / len, (a[0] - b[0]) / len};
      const double jump = (grad[e1][0] - grad[e2][0]) * normal[0] + (grad[e1][1] - grad[e2][1]) * normal[1];
      contribution = len * jump * jump * len;
    }
    sum[e1] += contribution;
    sum[e2] += contribution;
  }
  for (double& s : sum) s = std::sqrt(s);
  return sum;
}

const std::vector<double>& FieldTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return columns[k];
  fail(ErrorKind::invalid_argument, "field table has no column '" + name + "'");
}

void write_fields(const std::filesystem::path& path, const FieldTable& table) {
  require(table.names.size() == table.columns.size(), "write_fields: names/columns mismatch");
  const std::size_t n = table.num_nodes();
  for (const auto& c : table.columns) require(c.size() == n, "write_fields: ragged columns");
  for (const auto& name : table.names)
    require(!name.empty() && name.find_first_of(" \t\n") == std::string::npos,
            "write_fields: field names must be non-empty without whitespace");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << n << ' ' << table.columns.size() << '\n';
  for (std::size_t k = 0; k < table.names.size(); ++k) out << (k ? " " : "") << table.names[k];
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? " " : "") << table.columns[k][i];
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

FieldTable read_fields(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open field file " + path.string());
  long n = -1, k = -1;
  if (!(in >> n >> k) || n < 0 || k < 1) fail(ErrorKind::parse, path.string() + ": bad header");
  FieldTable t;
  t.names.resize(static_cast<std::size_t>(k));
  for (auto& name : t.names) in >> name;
  t.columns.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(n)));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < k; ++j) in >> t.columns[j][i];
  if (!in) fail(ErrorKind::parse, path.string() + ": truncated field file");
  return t;
}

}  // namespace amrdmd::fem
