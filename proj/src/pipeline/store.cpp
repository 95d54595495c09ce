#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/mesh.hpp"
#include "amrdmd/pipeline.hpp"

namespace amrdmd::pipeline {

std::string format_time(double t) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, res.ptr);
}

bool Store::uniform() const {
  for (const auto& e : entries)
    if (e.mesh_file != entries.front().mesh_file) return false;
  return true;
}

std::vector<double> Store::times() const {
  std::vector<double> t;
  for (const auto& e : entries) t.push_back(e.time);
  return t;
}

Store read_store(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (fs::exists(dir / ".failed")) fail(ErrorKind::io, dir.string() + " is marked as failed");
  std::ifstream in(manifest);
  if (!in) fail(ErrorKind::io, "cannot open " + manifest.string());
  Store store;
  store.dir = dir;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    StoreEntry e;
    std::string time;
    if (!(ss >> e.index >> time >> e.mesh_file >> e.field_file))
      fail(ErrorKind::parse, manifest.string() + ":" + std::to_string(lineno) + ": expected 'index time mesh_file field_file'");
    const auto res = std::from_chars(time.data(), time.data() + time.size(), e.time);
    if (res.ec != std::errc() || res.ptr != time.data() + time.size() || !std::isfinite(e.time))
      fail(ErrorKind::parse, manifest.string() + ":" + std::to_string(lineno) + ": bad time '" + time + "'");
    if (e.index != store.entries.size())
      fail(ErrorKind::parse, manifest.string() + ":" + std::to_string(lineno) + ": indices must run 0, 1, 2, ...");
    for (const auto& f : {e.mesh_file, e.field_file})
      if (!fs::exists(dir / f)) fail(ErrorKind::io, manifest.string() + ":" + std::to_string(lineno) + ": missing file " + f);
    store.entries.push_back(std::move(e));
  }
  if (store.entries.empty()) fail(ErrorKind::parse, manifest.string() + ": no snapshots");
  return store;
}

fem::MeshPtr StoreReader::mesh(std::size_t k) {
  const std::string& name = store_.entries.at(k).mesh_file;
  auto& slot = meshes_[name];
  if (!slot) slot = std::make_shared<const mesh::SimplicialMesh>(mesh::read_mesh(store_.dir / name));
  return slot;
}

fem::FieldTable StoreReader::fields(std::size_t k) const {
  return fem::read_fields(store_.dir / store_.entries.at(k).field_file);
}

void StoreWriter::add(double time, const fem::MeshPtr& mesh, const fem::FieldTable& fields) {
  require(mesh != nullptr, "store: snapshot without a mesh");
  require(fields.num_nodes() == mesh->num_nodes(), "store: field table does not match the mesh");
  char name[64];
  StoreEntry e;
  e.index = entries_.size();
  e.time = time;
  auto it = mesh_files_.find(mesh.get());
  if (it == mesh_files_.end()) {
    std::snprintf(name, sizeof name, "mesh_%05zu.mesh.txt", e.index);
    mesh::write_mesh(dir_ / name, *mesh);
    it = mesh_files_.emplace(mesh.get(), name).first;
    keep_alive_.push_back(mesh);
  }
  e.mesh_file = it->second;
  std::snprintf(name, sizeof name, "field_%05zu.field.txt", e.index);
  e.field_file = name;
  fem::write_fields(dir_ / name, fields);
  entries_.push_back(std::move(e));
}

void StoreWriter::finish() {
  std::ofstream out(dir_ / "manifest.txt");
  if (!out) fail(ErrorKind::io, "cannot write " + (dir_ / "manifest.txt").string());
  out << "# index time mesh_file field_file\n";
  for (const auto& e : entries_)
    out << e.index << ' ' << format_time(e.time) << ' ' << e.mesh_file << ' ' << e.field_file << '\n';
  if (!out) fail(ErrorKind::io, "write failed for " + (dir_ / "manifest.txt").string());
}

dmd::SnapshotMatrix load_snapshots(StoreReader& reader, const std::string& field, double t_from, double t_to) {
  const Store& store = reader.store();
  if (!store.uniform())
    fail(ErrorKind::invalid_plan, store.dir.string() + ": snapshots live on different meshes; project first");
  const double slack = 1e-9 * std::max({1.0, std::abs(t_from), std::abs(t_to)});
  std::vector<std::size_t> picked;
  for (std::size_t k = 0; k < store.entries.size(); ++k)
    if (store.entries[k].time >= t_from - slack && store.entries[k].time <= t_to + slack) picked.push_back(k);
  if (picked.empty()) fail(ErrorKind::invalid_argument, "no snapshots in the requested time window");

  double dt = 1.0;
  if (picked.size() > 1) {
    dt = store.entries[picked[1]].time - store.entries[picked[0]].time;
    for (std::size_t j = 1; j < picked.size(); ++j) {
      const double step = store.entries[picked[j]].time - store.entries[picked[j - 1]].time;
      if (!(std::abs(step - dt) <= 1e-9 * std::max(1.0, std::abs(dt))) || !(dt > 0.0))
        fail(ErrorKind::invalid_argument, "snapshots in the window are not evenly spaced in time");
    }
  }
  const fem::MeshPtr mesh = reader.mesh(picked.front());
  std::vector<std::vector<double>> columns;
  for (std::size_t k : picked) {
    const auto table = reader.fields(k);
    const auto& col = table.column(field);
    if (col.size() != mesh->num_nodes())
      fail(ErrorKind::invalid_plan, "snapshot " + std::to_string(k) + " has a different node count; project first");
    columns.push_back(col);
  }
  return dmd::make_snapshots(linalg::Matrix::from_columns(columns), store.entries[picked.front()].time, dt, field,
                             mesh);
}

}  // namespace amrdmd::pipeline
