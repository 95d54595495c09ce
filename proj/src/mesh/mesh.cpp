#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "amrdmd/error.hpp"
#include "amrdmd/mesh.hpp"

namespace amrdmd::mesh {

namespace {

double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

}  // namespace

SimplicialMesh::SimplicialMesh(int dim, std::vector<Point> nodes, std::vector<Cell> elements)
    : dim_(dim), nodes_(std::move(nodes)), elements_(std::move(elements)) {
  require(dim == 1 || dim == 2, "mesh: dimension must be 1 or 2");
  check_indices();
  auto roots = std::make_shared<std::vector<LineageRecord>>(elements_.size());
  lineage_id_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) lineage_id_[e] = static_cast<Index>(e);
  lineage_ = std::move(roots);
  index_siblings();
}

SimplicialMesh SimplicialMesh::with_lineage(
    int dim, std::vector<Point> nodes, std::vector<Cell> elements, std::vector<Index> lineage_ids,
    std::shared_ptr<const std::vector<LineageRecord>> lineage) {
  SimplicialMesh m;
  m.dim_ = dim;
  m.nodes_ = std::move(nodes);
  m.elements_ = std::move(elements);
  m.lineage_id_ = std::move(lineage_ids);
  m.lineage_ = std::move(lineage);
  require(m.lineage_id_.size() == m.elements_.size(), "mesh: lineage size mismatch");
  m.check_indices();
  m.index_siblings();
  return m;
}

void SimplicialMesh::check_indices() const {
  const auto n = static_cast<Index>(nodes_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int k = 0; k <= dim_; ++k) {
      const Index v = elements_[e][k];
      if (v < 0 || v >= n)
        fail(ErrorKind::invalid_argument,
             "mesh: element " + std::to_string(e) + " references node " + std::to_string(v) +
                 " out of range");
    }
    if (dim_ == 1 && elements_[e][2] != -1)
      fail(ErrorKind::invalid_argument, "mesh: 1D element carries a third node");
  }
}

void SimplicialMesh::index_siblings() {
  sibling_.assign(elements_.size(), -1);
  std::unordered_map<Index, Index> first_child;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const Index p = (*lineage_)[lineage_id_[e]].parent;
    if (p < 0) continue;
    auto [it, inserted] = first_child.try_emplace(p, static_cast<Index>(e));
    if (!inserted) {
      sibling_[e] = it->second;
      sibling_[it->second] = static_cast<Index>(e);
    }
  }
}

std::optional<Index> SimplicialMesh::parent(Index e) const {
  const Index p = (*lineage_)[lineage_id_[e]].parent;
  if (p < 0) return std::nullopt;
  return p;
}

std::vector<Index> SimplicialMesh::siblings(Index e) const {
  if (sibling_[e] < 0) return {};
  return {sibling_[e]};
}

int SimplicialMesh::child_slot(Index e) const { return (*lineage_)[lineage_id_[e]].child_slot; }

double SimplicialMesh::measure(Index e) const {
  const Cell& c = element(e);
  if (dim_ == 1) return std::abs(node(c[1])[0] - node(c[0])[0]);
  return std::abs(signed_area(node(c[0]), node(c[1]), node(c[2])));
}

double SimplicialMesh::diameter(Index e) const {
  const Cell& c = element(e);
  if (dim_ == 1) return std::abs(node(c[1])[0] - node(c[0])[0]);
  return std::max({distance(node(c[0]), node(c[1])), distance(node(c[1]), node(c[2])),
                   distance(node(c[2]), node(c[0]))});
}

double SimplicialMesh::total_measure() const {
  double sum = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e) sum += measure(static_cast<Index>(e));
  return sum;
}

Point SimplicialMesh::centroid(Index e) const {
  Point c{0.0, 0.0};
  for (Index v : element_nodes(e)) {
    c[0] += node(v)[0];
    c[1] += node(v)[1];
  }
  c[0] /= dim_ + 1;
  c[1] /= dim_ + 1;
  return c;
}

std::array<Point, 2> SimplicialMesh::bounding_box() const {
  Point lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
  for (const Point& p : nodes_) {
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  return {lo, hi};
}

FacetCensus facet_census(const SimplicialMesh& mesh) {
  std::map<std::pair<Index, Index>, int> count;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Cell& c = mesh.element(static_cast<Index>(e));
    if (mesh.dim() == 1) {
      ++count[{c[0], -1}];
      ++count[{c[1], -1}];
    } else {
      for (int k = 0; k < 3; ++k) {
        const Index a = c[k], b = c[(k + 1) % 3];
        ++count[{std::min(a, b), std::max(a, b)}];
      }
    }
  }
  FacetCensus census;
  for (const auto& [facet, n] : count) {
    if (n == 1) ++census.boundary;
    else if (n == 2) ++census.interior;
    else ++census.overloaded;
  }
  return census;
}

void SimplicialMesh::validate() const {
  const auto fail_with = [](const std::string& what) {
    fail(ErrorKind::invalid_argument, "mesh invalid: " + what);
  };
  if (elements_.empty()) fail_with("no elements");
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const double m = measure(static_cast<Index>(e));
    if (!(m > 0.0)) fail_with("element " + std::to_string(e) + " has zero measure");
  }

  // Duplicate nodes: sweep along x, comparing only nearby candidates.
  std::vector<Index> order(nodes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return node(a) < node(b); });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (node(order[j])[0] - node(order[i])[0] > kNodeTolerance) break;
      if (distance(node(order[i]), node(order[j])) <= kNodeTolerance)
        fail_with("nodes " + std::to_string(order[i]) + " and " + std::to_string(order[j]) +
                  " coincide");
    }
  }

  const FacetCensus census = facet_census(*this);
  if (census.overloaded > 0) fail_with("facet shared by more than two elements");
  if (dim_ == 1) {
    if (census.boundary != 2) fail_with("interval mesh is not a single connected segment chain");
    return;
  }

  // Hanging nodes show up as nodes lying inside an edge that only one element owns.
  std::map<std::pair<Index, Index>, int> count;
  for (const Cell& c : elements_)
    for (int k = 0; k < 3; ++k) ++count[{std::min(c[k], c[(k + 1) % 3]), std::max(c[k], c[(k + 1) % 3])}];
  std::vector<char> on_boundary_edge(nodes_.size(), 0);
  for (const auto& [edge, n] : count)
    if (n == 1) on_boundary_edge[edge.first] = on_boundary_edge[edge.second] = 1;
  for (const auto& [edge, n] : count) {
    if (n != 1) continue;
    const Point& a = node(edge.first);
    const Point& b = node(edge.second);
    const double len = distance(a, b);
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (!on_boundary_edge[v] || static_cast<Index>(v) == edge.first ||
          static_cast<Index>(v) == edge.second)
        continue;
      const Point& p = nodes_[v];
      const double t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
      if (t <= 0.0 || t >= 1.0) continue;
      if (std::abs(2.0 * signed_area(a, b, p)) / len <= 1e-12 * len)
        fail_with("hanging node " + std::to_string(v) + " on edge (" + std::to_string(edge.first) +
                  ", " + std::to_string(edge.second) + ")");
    }
  }
}

SimplicialMesh build_interval_mesh(double a, double b, int n_elems) {
  require(n_elems >= 1, "build_interval_mesh: n_elems must be positive");
  require(std::isfinite(a) && std::isfinite(b) && a < b, "build_interval_mesh: need a < b");
  std::vector<Point> nodes(static_cast<std::size_t>(n_elems) + 1);
  const double h = (b - a) / n_elems;
  for (int i = 0; i <= n_elems; ++i) nodes[i] = {i == n_elems ? b : a + i * h, 0.0};
  std::vector<Cell> cells(static_cast<std::size_t>(n_elems));
  for (int i = 0; i < n_elems; ++i) cells[i] = {i, i + 1, -1};
  return SimplicialMesh(1, std::move(nodes), std::move(cells));
}

SimplicialMesh build_structured_triangle_mesh(std::array<double, 2> x_range,
                                              std::array<double, 2> y_range, int nx, int ny) {
  require(nx >= 1 && ny >= 1, "build_structured_triangle_mesh: nx, ny must be positive");
  require(x_range[0] < x_range[1] && y_range[0] < y_range[1],
          "build_structured_triangle_mesh: degenerate range");
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    const double y = j == ny ? y_range[1] : y_range[0] + (y_range[1] - y_range[0]) * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? x_range[1] : x_range[0] + (x_range[1] - x_range[0]) * i / nx;
      nodes.push_back({x, y});
    }
  }
  const auto id = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Index a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      // Newest vertex first; the refinement edge (slots 1,2) is the diagonal a-c.
      cells.push_back({b, c, a});
      cells.push_back({d, a, c});
    }
  }
  return SimplicialMesh(2, std::move(nodes), std::move(cells));
}

void write_mesh(const std::filesystem::path& path, const SimplicialMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << mesh.dim() << ' ' << mesh.num_nodes() << ' ' << mesh.num_elements() << '\n';
  for (const Point& p : mesh.nodes()) {
    out << p[0];
    if (mesh.dim() == 2) out << ' ' << p[1];
    out << '\n';
  }
  for (const Cell& c : mesh.elements()) {
    out << c[0] << ' ' << c[1];
    if (mesh.dim() == 2) out << ' ' << c[2];
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

SimplicialMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open mesh file " + path.string());
  int dim = 0;
  long n_nodes = -1, n_elems = -1;
  if (!(in >> dim >> n_nodes >> n_elems) || (dim != 1 && dim != 2) || n_nodes < 0 || n_elems < 0)
    fail(ErrorKind::parse, path.string() + ": bad header");
  std::vector<Point> nodes(static_cast<std::size_t>(n_nodes), Point{0.0, 0.0});
  for (auto& p : nodes) {
    in >> p[0];
    if (dim == 2) in >> p[1];
  }
  std::vector<Cell> cells(static_cast<std::size_t>(n_elems), Cell{-1, -1, -1});
  for (auto& c : cells) {
    in >> c[0] >> c[1];
    if (dim == 2) in >> c[2];
  }
  if (!in) fail(ErrorKind::parse, path.string() + ": truncated mesh file");
  std::string extra;
  if (in >> extra) fail(ErrorKind::parse, path.string() + ": trailing data");
  return SimplicialMesh(dim, std::move(nodes), std::move(cells));
}

}  // namespace amrdmd::mesh
