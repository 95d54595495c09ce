#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <unordered_map>

#include "amrdmd/error.hpp"
#include "amrdmd/mesh.hpp"

namespace amrdmd::mesh {

namespace {

using EdgeKey = std::uint64_t;

EdgeKey edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<EdgeKey>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

// Mutable copy of a mesh while a plan is applied.
struct Workspace {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<Cell> cells;
  std::vector<Index> lineage_ids;
  std::vector<LineageRecord> records;

  Index add_child(Index parent_record, std::uint8_t slot) {
    records.push_back({parent_record, records[parent_record].level + 1, slot});
    return static_cast<Index>(records.size() - 1);
  }

  Index add_midpoint(Index a, Index b) {
    const Point& p = nodes[a];
    const Point& q = nodes[b];
    nodes.push_back({0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])});
    return static_cast<Index>(nodes.size() - 1);
  }
};

Workspace open(const SimplicialMesh& mesh) {
  return {mesh.dim(), mesh.nodes(), mesh.elements(), mesh.lineage_ids(), *mesh.lineage()};
}

[[noreturn]] void bad_plan(const std::string& why) { fail(ErrorKind::invalid_plan, "refine: " + why); }

// Merges complete sibling pairs. Returns, for each input element, its index in
// the coarsened workspace (-1 if it was absorbed into a parent).
std::vector<Index> coarsen(const SimplicialMesh& mesh, const std::set<Index>& flagged, Workspace& ws) {
  const std::size_t n_elem = mesh.num_elements();
  std::vector<Index> old_to_new(n_elem);
  for (std::size_t e = 0; e < n_elem; ++e) old_to_new[e] = static_cast<Index>(e);
  if (flagged.empty()) return old_to_new;

  for (Index e : flagged) {
    if (mesh.level(e) < 1) bad_plan("element " + std::to_string(e) + " is at level 0 and cannot be coarsened");
    const Index s = mesh.sibling(e);
    if (s < 0 || !flagged.count(s))
      bad_plan("element " + std::to_string(e) + " is flagged for coarsening without its full sibling group");
  }

  std::vector<std::pair<Index, Index>> pairs;  // (slot 0, slot 1)
  for (Index e : flagged)
    if (mesh.child_slot(e) == 0) pairs.emplace_back(e, mesh.sibling(e));

  std::vector<char> removed_node(mesh.num_nodes(), 0);
  std::vector<char> merge(pairs.size(), 1);
  if (mesh.dim() == 2) {
    std::vector<std::vector<Index>> incident(mesh.num_nodes());
    for (std::size_t e = 0; e < n_elem; ++e)
      for (Index v : mesh.element_nodes(static_cast<Index>(e))) incident[v].push_back(static_cast<Index>(e));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const Index m = mesh.element(pairs[k].first)[0];
      for (Index f : incident[m]) {
        if (!flagged.count(f) || mesh.element(f)[0] != m) {
          merge[k] = 0;
          break;
        }
      }
    }
  }

  std::vector<char> drop(n_elem, 0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!merge[k]) continue;
    auto [c0, c1] = pairs[k];
    const Cell& a = mesh.element(c0);
    const Cell& b = mesh.element(c1);
    Cell parent;
    Index midpoint;
    if (mesh.dim() == 1) {
      parent = {a[0], b[1], -1};
      midpoint = a[1];
    } else {
      parent = {a[1], a[2], b[1]};
      midpoint = a[0];
    }
    removed_node[midpoint] = 1;
    const Index keep = std::min(c0, c1);
    const Index gone = std::max(c0, c1);
    ws.cells[keep] = parent;
    ws.lineage_ids[keep] = *mesh.parent(c0);
    drop[gone] = 1;
  }

  std::vector<Index> node_map(mesh.num_nodes(), -1);
  std::vector<Point> nodes;
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    if (removed_node[v]) continue;
    node_map[v] = static_cast<Index>(nodes.size());
    nodes.push_back(ws.nodes[v]);
  }
  std::vector<Cell> cells;
  std::vector<Index> lineage_ids;
  for (std::size_t e = 0; e < n_elem; ++e) {
    if (drop[e]) {
      old_to_new[e] = -1;
      continue;
    }
    Cell c = ws.cells[e];
    for (int k = 0; k <= mesh.dim(); ++k) c[k] = node_map[c[k]];
    old_to_new[e] = static_cast<Index>(cells.size());
    cells.push_back(c);
    lineage_ids.push_back(ws.lineage_ids[e]);
  }
  ws.nodes = std::move(nodes);
  ws.cells = std::move(cells);
  ws.lineage_ids = std::move(lineage_ids);
  return old_to_new;
}

void split_segments(Workspace& ws, const std::vector<Index>& marked) {
  std::vector<char> is_marked(ws.cells.size(), 0);
  std::vector<EdgeKey> edges;
  for (Index e : marked) {
    is_marked[e] = 1;
    edges.push_back(edge_key(ws.cells[e][0], ws.cells[e][1]));
  }
  std::sort(edges.begin(), edges.end());
  std::unordered_map<EdgeKey, Index> midpoint;
  for (EdgeKey k : edges)
    midpoint[k] = ws.add_midpoint(static_cast<Index>(k >> 32), static_cast<Index>(k & 0xffffffffu));

  std::vector<Cell> cells;
  std::vector<Index> lineage_ids;
  for (std::size_t e = 0; e < ws.cells.size(); ++e) {
    const Cell& c = ws.cells[e];
    if (!is_marked[e]) {
      cells.push_back(c);
      lineage_ids.push_back(ws.lineage_ids[e]);
      continue;
    }
    const Index m = midpoint.at(edge_key(c[0], c[1]));
    cells.push_back({c[0], m, -1});
    lineage_ids.push_back(ws.add_child(ws.lineage_ids[e], 0));
    cells.push_back({m, c[1], -1});
    lineage_ids.push_back(ws.add_child(ws.lineage_ids[e], 1));
  }
  ws.cells = std::move(cells);
  ws.lineage_ids = std::move(lineage_ids);
}

// One newest-vertex bisection pass with edge-marking closure. A triangle
// (v0, v1, v2) has newest vertex v0 and refinement edge v1-v2; its children
// are (m, v0, v1) and (m, v2, v0). Returns the pre-pass index each output
// element descends from.
std::vector<Index> bisect_triangles(Workspace& ws, const std::vector<Index>& marked) {
  std::unordered_map<EdgeKey, std::vector<Index>> edge_elements;
  for (std::size_t e = 0; e < ws.cells.size(); ++e) {
    const Cell& c = ws.cells[e];
    for (int k = 0; k < 3; ++k) edge_elements[edge_key(c[k], c[(k + 1) % 3])].push_back(static_cast<Index>(e));
  }

  std::unordered_map<EdgeKey, Index> midpoint;  // value filled after closure
  std::deque<EdgeKey> pending;
  const auto mark = [&](EdgeKey k) {
    if (midpoint.emplace(k, -1).second) pending.push_back(k);
  };
  for (Index e : marked) mark(edge_key(ws.cells[e][1], ws.cells[e][2]));
  while (!pending.empty()) {
    const EdgeKey k = pending.front();
    pending.pop_front();
    for (Index e : edge_elements[k]) mark(edge_key(ws.cells[e][1], ws.cells[e][2]));
  }

  std::vector<EdgeKey> edges;
  edges.reserve(midpoint.size());
  for (const auto& kv : midpoint) edges.push_back(kv.first);
  std::sort(edges.begin(), edges.end());
  for (EdgeKey k : edges)
    midpoint[k] = ws.add_midpoint(static_cast<Index>(k >> 32), static_cast<Index>(k & 0xffffffffu));

  std::vector<Cell> cells;
  std::vector<Index> lineage_ids;
  std::vector<Index> origin;
  std::function<void(const Cell&, Index, Index)> emit = [&](const Cell& t, Index record, Index from) {
    const auto it = midpoint.find(edge_key(t[1], t[2]));
    if (it == midpoint.end()) {
      cells.push_back(t);
      lineage_ids.push_back(record);
      origin.push_back(from);
      return;
    }
    const Index m = it->second;
    const Index r0 = ws.add_child(record, 0);
    const Index r1 = ws.add_child(record, 1);
    emit({m, t[0], t[1]}, r0, from);
    emit({m, t[2], t[0]}, r1, from);
  };
  for (std::size_t e = 0; e < ws.cells.size(); ++e)
    emit(ws.cells[e], ws.lineage_ids[e], static_cast<Index>(e));
  ws.cells = std::move(cells);
  ws.lineage_ids = std::move(lineage_ids);
  return origin;
}

}  // namespace

SimplicialMesh refine(const SimplicialMesh& mesh, const RefinementPlan& plan) {
  const auto n_elem = static_cast<Index>(mesh.num_elements());
  for (Index e : plan.refine)
    if (e < 0 || e >= n_elem) bad_plan("refine id " + std::to_string(e) + " out of range");
  for (Index e : plan.coarsen) {
    if (e < 0 || e >= n_elem) bad_plan("coarsen id " + std::to_string(e) + " out of range");
    if (plan.refine.count(e)) bad_plan("element " + std::to_string(e) + " flagged for both refine and coarsen");
  }
  const int growth = mesh.dim() == 1 ? 1 : 2;
  for (Index e : plan.refine)
    if (mesh.level(e) + growth > plan.max_level)
      bad_plan("refining element " + std::to_string(e) + " would exceed max_level " +
               std::to_string(plan.max_level));

  if (plan.refine.empty() && plan.coarsen.empty()) return mesh;

  Workspace ws = open(mesh);
  const std::vector<Index> old_to_new = coarsen(mesh, plan.coarsen, ws);

  std::vector<Index> marked;
  for (Index e : plan.refine) marked.push_back(old_to_new[e]);
  std::sort(marked.begin(), marked.end());

  if (!marked.empty()) {
    if (mesh.dim() == 1) {
      split_segments(ws, marked);
    } else {
      std::vector<char> first(ws.cells.size(), 0);
      for (Index e : marked) first[e] = 1;
      const std::vector<Index> origin = bisect_triangles(ws, marked);
      std::vector<Index> again;
      for (std::size_t e = 0; e < origin.size(); ++e)
        if (first[origin[e]]) again.push_back(static_cast<Index>(e));
      bisect_triangles(ws, again);
    }
  }

  for (std::size_t e = 0; e < ws.cells.size(); ++e)
    if (ws.records[ws.lineage_ids[e]].level > plan.max_level)
      bad_plan("closure refinement exceeded max_level " + std::to_string(plan.max_level));

  return SimplicialMesh::with_lineage(
      ws.dim, std::move(ws.nodes), std::move(ws.cells), std::move(ws.lineage_ids),
      std::make_shared<const std::vector<LineageRecord>>(std::move(ws.records)));
}

SimplicialMesh refine_uniformly(const SimplicialMesh& mesh, int times) {
  require(times >= 0, "refine_uniformly: negative count");
  SimplicialMesh out = mesh;
  for (int t = 0; t < times; ++t) {
    RefinementPlan plan;
    plan.max_level = std::numeric_limits<int>::max() / 2;
    for (std::size_t e = 0; e < out.num_elements(); ++e) plan.refine.insert(static_cast<Index>(e));
    out = refine(out, plan);
  }
  return out;
}

}  // namespace amrdmd::mesh
