#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "amrdmd/dmd.hpp"
#include "amrdmd/fem.hpp"

namespace amrdmd::pipeline {

namespace fs = std::filesystem;

// Exit codes of the command-line front end.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kRuntime = 3,
  kFilesystem = 4,
};

// One manifest line: `index time mesh_file field_file`, file names relative
// to the store directory.
struct StoreEntry {
  std::size_t index = 0;
  double time = 0.0;
  std::string mesh_file;
  std::string field_file;
};

struct Store {
  fs::path dir;
  std::vector<StoreEntry> entries;

  // All snapshots share one mesh file.
  bool uniform() const;
  std::vector<double> times() const;
};

// Reads and validates manifest.txt; every referenced file must exist.
Store read_store(const fs::path& dir);

// Loads meshes once per distinct file.
class StoreReader {
 public:
  explicit StoreReader(Store store) : store_(std::move(store)) {}

  const Store& store() const { return store_; }
  fem::MeshPtr mesh(std::size_t k);
  fem::FieldTable fields(std::size_t k) const;

 private:
  Store store_;
  std::map<std::string, fem::MeshPtr> meshes_;
};

// Writes a store into an existing directory. A mesh file is written the
// first time its MeshPtr is seen; later snapshots on the same mesh reuse it.
class StoreWriter {
 public:
  explicit StoreWriter(fs::path dir) : dir_(std::move(dir)) {}

  // The time is index * dt_o when given that way, to keep manifests exact.
  void add(double time, const fem::MeshPtr& mesh, const fem::FieldTable& fields);
  void finish();
  std::size_t size() const { return entries_.size(); }

 private:
  fs::path dir_;
  std::vector<StoreEntry> entries_;
  std::map<const mesh::SimplicialMesh*, std::string> mesh_files_;
  std::vector<fem::MeshPtr> keep_alive_;
};

// Shortest decimal that reads back to the same double.
std::string format_time(double t);

// Snapshot matrix of one field over the entries with t_from <= t <= t_to.
// Throws a runtime error mentioning "project first" on a non-uniform store.
dmd::SnapshotMatrix load_snapshots(StoreReader& reader, const std::string& field, double t_from, double t_to);

// The full command-line program; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace amrdmd::pipeline
