#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace amrdmd::mesh {

using Index = std::int32_t;
// Coordinates always carry two components; 1D meshes keep y = 0.
using Point = std::array<double, 2>;
// Node indices of a simplex; 1D segments use the first two slots, the third is -1.
using Cell = std::array<Index, 3>;

inline constexpr double kNodeTolerance = 1e-12;
inline constexpr double kBarycentricTolerance = 1e-10;

// Refinement genealogy shared across the meshes of one adaptive history.
// Each active element points to a record; records point to their parent record.
struct LineageRecord {
  Index parent = -1;  // record index, -1 for roots
  int level = 0;
  std::uint8_t child_slot = 0;  // 0 or 1 within the sibling pair
};

class SimplicialMesh {
 public:
  SimplicialMesh(int dim, std::vector<Point> nodes, std::vector<Cell> elements);

  int dim() const { return dim_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  int vertices_per_element() const { return dim_ + 1; }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Cell>& elements() const { return elements_; }
  const Point& node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Cell& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }
  std::span<const Index> element_nodes(Index e) const {
    return {elements_[static_cast<std::size_t>(e)].data(), static_cast<std::size_t>(dim_ + 1)};
  }

  int level(Index e) const { return (*lineage_)[lineage_id_[static_cast<std::size_t>(e)]].level; }
  // Lineage record of the parent, if this element came from a bisection.
  std::optional<Index> parent(Index e) const;
  // Other active elements sharing this element's parent.
  std::vector<Index> siblings(Index e) const;
  // The active sibling of e, or -1 when e is a root or its sibling was refined.
  Index sibling(Index e) const { return sibling_[static_cast<std::size_t>(e)]; }
  int child_slot(Index e) const;

  double measure(Index e) const;
  double diameter(Index e) const;
  double total_measure() const;
  Point centroid(Index e) const;
  std::array<Point, 2> bounding_box() const;

  // Throws invalid-argument describing the first violated invariant.
  void validate() const;

  // Low-level access used by refinement; keeps lineage aligned with elements.
  const std::vector<Index>& lineage_ids() const { return lineage_id_; }
  const std::shared_ptr<const std::vector<LineageRecord>>& lineage() const { return lineage_; }
  static SimplicialMesh with_lineage(int dim, std::vector<Point> nodes, std::vector<Cell> elements,
                                     std::vector<Index> lineage_ids,
                                     std::shared_ptr<const std::vector<LineageRecord>> lineage);

  bool same_geometry(const SimplicialMesh& other) const {
    return dim_ == other.dim_ && nodes_ == other.nodes_ && elements_ == other.elements_;
  }

 private:
  SimplicialMesh() = default;
  void check_indices() const;
  void index_siblings();

  int dim_ = 1;
  std::vector<Point> nodes_;
  std::vector<Cell> elements_;
  std::vector<Index> lineage_id_;
  std::vector<Index> sibling_;
  std::shared_ptr<const std::vector<LineageRecord>> lineage_;
};

SimplicialMesh build_interval_mesh(double a, double b, int n_elems);

// Each cell split along its lower-left -> upper-right diagonal. The diagonal is
// the refinement edge of both triangles, which makes the initial labelling
// compatible for newest-vertex bisection.
SimplicialMesh build_structured_triangle_mesh(std::array<double, 2> x_range,
                                              std::array<double, 2> y_range, int nx, int ny);

struct RefinementPlan {
  std::set<Index> refine;
  std::set<Index> coarsen;
  int max_level = 64;
};

// 1D: flagged segments are split at their midpoint.
// 2D: flagged triangles are bisected twice by newest-vertex bisection (their
// diameter halves); conformity is restored by recursive closure bisections.
// Level counts bisections. Coarsening undoes one bisection per complete
// sibling pair; in 2D a pair is merged only when its midpoint node can be
// removed without leaving a hanging node.
SimplicialMesh refine(const SimplicialMesh& mesh, const RefinementPlan& plan);

// Splits every element once (1D) or once by full-level quadrisection (2D).
SimplicialMesh refine_uniformly(const SimplicialMesh& mesh, int times = 1);

struct Location {
  Index element = -1;
  std::array<double, 3> barycentric{};
};

// Uniform background grid of element buckets. Holds a reference to the mesh,
// which must outlive the locator.
class PointLocator {
 public:
  explicit PointLocator(const SimplicialMesh& mesh);

  // Lowest-id element containing x within the barycentric tolerance,
  // or nullopt if none does.
  std::optional<Location> find(const Point& x) const;
  // As find(), but throws not-found.
  Location locate(const Point& x) const;

  const SimplicialMesh& mesh() const { return *mesh_; }

 private:
  std::array<int, 2> bin_of(const Point& x) const;

  const SimplicialMesh* mesh_;
  std::array<Point, 2> box_{};
  std::array<double, 2> origin_{};
  std::array<double, 2> cell_size_{};
  std::array<int, 2> bins_{};
  std::vector<std::vector<Index>> buckets_;
};

// Barycentric coordinates of x with respect to element e.
std::array<double, 3> barycentric(const SimplicialMesh& mesh, Index e, const Point& x);

// Exhaustive scan; reference implementation for PointLocator.
std::optional<Location> locate_by_scan(const SimplicialMesh& mesh, const Point& x);

Location locate_point(const SimplicialMesh& mesh, const Point& x);

// Facet incidence census: count of elements per facet (sorted node tuple).
struct FacetCensus {
  std::size_t interior = 0;
  std::size_t boundary = 0;
  std::size_t overloaded = 0;  // facets shared by more than two elements
};
FacetCensus facet_census(const SimplicialMesh& mesh);

void write_mesh(const std::filesystem::path& path, const SimplicialMesh& mesh);
SimplicialMesh read_mesh(const std::filesystem::path& path);

}  // namespace amrdmd::mesh
