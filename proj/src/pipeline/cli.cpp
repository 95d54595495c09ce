#include <algorithm>
#include <chrono>
#include <iomanip>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "amrdmd/error.hpp"
#include "amrdmd/l2projection.hpp"
#include "amrdmd/mesh.hpp"
#include "amrdmd/pipeline.hpp"
#include "amrdmd/qoi.hpp"
#include "amrdmd/seird.hpp"

#ifndef AMRDMD_VERSION
#define AMRDMD_VERSION "0.0.0"
#endif

namespace amrdmd::pipeline {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SafetyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
  bool quiet = false;
};

struct Context {
  Globals globals;
  std::vector<std::string> args;
  std::ostream* out = nullptr;
  // Output directory of the running command, for the failure marker.
  std::optional<fs::path> active_dir;

  void log(const std::string& msg) const {
    if (!globals.quiet) *out << msg << '\n';
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string run_id(const std::vector<std::string>& args) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  mix(AMRDMD_VERSION);
  for (const auto& a : args) mix(a);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool inside(const fs::path& child, const fs::path& parent) {
  const fs::path c = fs::weakly_canonical(child), p = fs::weakly_canonical(parent);
  auto ci = c.begin();
  for (auto pi = p.begin(); pi != p.end(); ++pi, ++ci)
    if (ci == c.end() || *ci != *pi) return false;
  return true;
}

// Creates a fresh output directory holding a `.failed` marker until commit().
void open_output_dir(Context& ctx, const fs::path& dir, const std::vector<fs::path>& inputs) {
  for (const auto& in : inputs)
    if (inside(in, dir) || inside(dir, in))
      throw SafetyError("output " + dir.string() + " overlaps input " + in.string());
  if (fs::exists(dir)) {
    if (!ctx.globals.force) throw SafetyError(dir.string() + " already exists (use --force to replace it)");
    if (!fs::is_directory(dir)) throw SafetyError(dir.string() + " exists and is not a directory");
    const bool ours = fs::is_empty(dir) || fs::exists(dir / "manifest.txt") || fs::exists(dir / "pipeline.json") ||
                      fs::exists(dir / ".failed");
    if (!ours) throw SafetyError("refusing to replace " + dir.string() + ": it does not look like an output of this tool");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  std::ofstream(dir / ".failed") << "incomplete\n";
  ctx.active_dir = dir;
}

void commit_output_dir(Context& ctx) {
  fs::remove(*ctx.active_dir / ".failed");
  ctx.active_dir.reset();
}

// Single-file outputs go through a temporary name and are renamed at the end.
class FileOutput {
 public:
  FileOutput(const Context& ctx, fs::path path, const std::vector<fs::path>& inputs) : path_(std::move(path)) {
    for (const auto& in : inputs)
      if (fs::exists(path_) && fs::equivalent(path_, in)) throw SafetyError("output " + path_.string() + " is an input");
    if (fs::exists(path_) && !ctx.globals.force)
      throw SafetyError(path_.string() + " already exists (use --force to replace it)");
    if (fs::exists(path_) && fs::is_directory(path_)) throw SafetyError(path_.string() + " is a directory");
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    partial_ = path_;
    partial_ += ".partial";
  }
  ~FileOutput() {
    std::error_code ec;
    if (!done_) fs::remove(partial_, ec);
  }
  const fs::path& partial() const { return partial_; }
  const fs::path& path() const { return path_; }
  void commit() {
    fs::rename(partial_, path_);
    done_ = true;
  }

 private:
  fs::path path_, partial_;
  bool done_ = false;
};

Json base_manifest(const Context& ctx, const std::string& command) {
  Json j;
  j["run_id"] = run_id(ctx.args);
  j["tool"] = "amrdmd";
  j["version"] = AMRDMD_VERSION;
  j["command"] = command;
  j["arguments"] = ctx.args;
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
}

void write_table(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::ofstream out(path);
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

fem::FieldTable table_of(const seird::State& st) {
  fem::FieldTable t;
  for (std::size_t c = 0; c < seird::kNumCompartments; ++c) {
    t.names.push_back(seird::kCompartments[c]);
    t.columns.push_back(st.u[c]);
  }
  return t;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(Context& ctx, const fs::path& config_path, const fs::path& out_dir) {
  seird::RunConfig cfg;
  try {
    cfg = seird::read_config(config_path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::uint64_t seed = ctx.globals.seed_set ? ctx.globals.seed : cfg.seed;
  open_output_dir(ctx, out_dir, {config_path});

  Json j = base_manifest(ctx, "simulate");
  j["config"] = Json(cfg.entries);
  j["inputs"] = {config_path.string()};
  Json timings;
  StoreWriter writer(out_dir);
  std::vector<std::string> outputs{"manifest.txt"};

  if (cfg.generator == "seird") {
    const auto t0 = Clock::now();
    const seird::SeirdRun run = seird::run_seird_amr(cfg.params, cfg.policy, cfg.solver);
    timings["simulation"] = run.seconds_simulation;
    timings["in_loop_projection"] = run.seconds_projection;
    timings["total_run"] = seconds_since(t0);
    const auto t1 = Clock::now();
    for (std::size_t k = 0; k < run.outputs.size(); ++k)
      writer.add(static_cast<double>(k) * cfg.params.dt_o, run.outputs[k].mesh, table_of(run.outputs[k]));
    writer.finish();
    mesh::write_mesh(out_dir / "reference.mesh.txt", *run.reference);
    qoi::write_csv(out_dir / "population.csv", run.population_simulation);
    timings["write"] = seconds_since(t1);
    outputs.push_back("reference.mesh.txt");
    outputs.push_back("population.csv");
    j["seeds"] = Json::object();
    ctx.log("simulated " + std::to_string(run.outputs.size()) + " snapshots to t = " + format_time(run.times.back()) +
            ", largest Picard count " + std::to_string(run.max_picard_iterations));
  } else {
    if (cfg.n < 2) throw UsageError(config_path.string() + ": the linear generator needs n >= 2 for a store");
    const auto t0 = Clock::now();
    const auto y = seird::synth_linear_series(cfg.eigenvalues, cfg.n, cfg.m, seed, cfg.params.dt_o);
    timings["generate"] = seconds_since(t0);
    const auto t1 = Clock::now();
    for (std::size_t k = 0; k < y.columns(); ++k) {
      fem::FieldTable t;
      t.names = {"u"};
      t.columns = {y.data.column(k)};
      writer.add(static_cast<double>(k) * cfg.params.dt_o, y.mesh, t);
    }
    writer.finish();
    timings["write"] = seconds_since(t1);
    j["seeds"] = {{"synth_linear_series", seed}};
    ctx.log("generated " + std::to_string(y.columns()) + " linear snapshots of size " + std::to_string(cfg.n));
  }
  j["outputs"] = outputs;
  j["snapshots"] = writer.size();
  j["timings_seconds"] = timings;
  write_json(out_dir / "pipeline.json", j);
  commit_output_dir(ctx);
}

// ---------------------------------------------------------------- demo

void cmd_demo_indicator(Context& ctx, const fs::path& out_dir) {
  open_output_dir(ctx, out_dir, {});
  const auto t0 = Clock::now();
  const seird::IndicatorDemo demo = seird::indicator_projection_demo(ctx.globals.seed);
  const double elapsed = seconds_since(t0);

  Json report;
  const std::pair<const char*, const fem::FeField*> parts[] = {
      {"adaptive", &demo.adaptive}, {"structured", &demo.structured}, {"unstructured", &demo.unstructured}};
  for (const auto& [name, field] : parts) {
    mesh::write_mesh(out_dir / (std::string(name) + ".mesh.txt"), *field->mesh);
    fem::FieldTable t;
    t.names = {"u"};
    t.columns = {field->values};
    fem::write_fields(out_dir / (std::string(name) + ".field.txt"), t);
    report[name] = {{"elements", field->mesh->num_elements()},
                    {"nodes", field->mesh->num_nodes()},
                    {"inf_norm", fem::inf_norm(*field)},
                    {"integral", fem::integrate(*field)}};
    ctx.log(std::string(name) + ": " + std::to_string(field->mesh->num_elements()) + " elements, " +
            std::to_string(field->mesh->num_nodes()) + " nodes, max |u| = " + num(fem::inf_norm(*field)));
  }
  write_json(out_dir / "demo.json", report);

  Json j = base_manifest(ctx, "demo indicator");
  j["inputs"] = Json::array();
  j["outputs"] = {"demo.json", "adaptive.mesh.txt", "adaptive.field.txt", "structured.mesh.txt",
                  "structured.field.txt", "unstructured.mesh.txt", "unstructured.field.txt"};
  j["seeds"] = {{"perturbed_mesh", ctx.globals.seed}};
  j["timings_seconds"] = {{"demo", elapsed}};
  write_json(out_dir / "pipeline.json", j);
  commit_output_dir(ctx);
}

// ---------------------------------------------------------------- project

void cmd_project(Context& ctx, const fs::path& store_dir, const fs::path& target_path, const fs::path& out_dir) {
  StoreReader reader(read_store(store_dir));
  const auto target = std::make_shared<const mesh::SimplicialMesh>(mesh::read_mesh(target_path));
  open_output_dir(ctx, out_dir, {store_dir});

  const auto t0 = Clock::now();
  StoreWriter writer(out_dir);
  std::vector<std::string> log_rows;
  std::shared_ptr<l2projection::ProjectionOperator> op;
  std::string op_mesh;
  double worst = 0.0;
  for (std::size_t k = 0; k < reader.store().entries.size(); ++k) {
    const auto& entry = reader.store().entries[k];
    try {
      if (!op || op_mesh != entry.mesh_file) {
        op = std::make_shared<l2projection::ProjectionOperator>(l2projection::build_projection(reader.mesh(k), target));
        op_mesh = entry.mesh_file;
      }
      const fem::FieldTable in = reader.fields(k);
      fem::FieldTable out;
      out.names = in.names;
      double residual = 0.0;
      for (const auto& col : in.columns) {
        const auto res = l2projection::project_with_report(*op, fem::make_field(op->donor(), col));
        residual = std::max(residual, res.galerkin_residual);
        out.columns.push_back(res.field.values);
      }
      worst = std::max(worst, residual);
      writer.add(entry.time, target, out);
      log_rows.push_back(std::to_string(k) + "," + format_time(entry.time) + "," + num(residual));
    } catch (const Error& e) {
      throw Error(e.kind(), "snapshot " + std::to_string(k) + " (t = " + format_time(entry.time) + "): " + e.what());
    }
  }
  writer.finish();
  write_table(out_dir / "projection.csv", "index,time,galerkin_residual", log_rows);

  Json j = base_manifest(ctx, "project");
  j["inputs"] = {store_dir.string(), target_path.string()};
  j["outputs"] = {"manifest.txt", "projection.csv"};
  j["snapshots"] = writer.size();
  j["max_galerkin_residual"] = worst;
  j["seeds"] = Json::object();
  j["timings_seconds"] = {{"projection", seconds_since(t0)}};
  write_json(out_dir / "pipeline.json", j);
  commit_output_dir(ctx);
  ctx.log("projected " + std::to_string(writer.size()) + " snapshots onto " + std::to_string(target->num_nodes()) +
          " nodes, largest Galerkin residual " + num(worst));
}

// ---------------------------------------------------------------- dmd

struct FitArgs {
  std::string field = "u";
  double from = -HUGE_VAL, to = HUGE_VAL;
  std::optional<std::size_t> rank;
  std::optional<double> tau;
  std::string svd = "exact";
  std::size_t oversample = 10;
  std::size_t power_iterations = 2;
  bool lsq = false;
};

void cmd_dmd_fit(Context& ctx, const fs::path& store_dir, const fs::path& model_path, const FitArgs& a) {
  if (!a.rank && !a.tau) throw UsageError("dmd fit needs --rank or --tau");
  StoreReader reader(read_store(store_dir));
  const auto y = load_snapshots(reader, a.field, a.from, a.to);
  if (y.columns() < 3) throw UsageError("dmd fit needs at least 3 snapshots in the window");
  const std::size_t m = y.columns() - 1;
  if (a.rank && (*a.rank == 0 || *a.rank > m))
    throw UsageError("--rank " + std::to_string(*a.rank) + " must lie in [1, " + std::to_string(m) + "]");

  dmd::FitOptions opt;
  if (a.rank)
    opt.rank = dmd::FixedRank{*a.rank};
  else
    opt.rank = dmd::EnergyThreshold{*a.tau};
  if (a.svd == "randomized")
    opt.svd = dmd::RandomizedSvd{ctx.globals.seed, a.oversample, a.power_iterations};
  opt.least_squares_amplitudes = a.lsq;

  FileOutput out(ctx, model_path, {store_dir});
  const auto t0 = Clock::now();
  const dmd::DmdModel model = dmd::fit(y, opt);
  const double elapsed = seconds_since(t0);
  dmd::write_model(out.partial(), model);
  out.commit();
  for (const auto& w : model.warnings) ctx.log("warning: " + w);

  Json j = base_manifest(ctx, "dmd fit");
  j["inputs"] = {store_dir.string()};
  j["outputs"] = {model_path.string()};
  j["field"] = a.field;
  j["window"] = {{"t0", y.t0}, {"t1", y.time(y.columns() - 1)}, {"snapshots", y.columns()}};
  j["rank"] = model.rank();
  j["aliased"] = model.aliased;
  j["seeds"] = a.svd == "randomized" ? Json{{"randomized_svd", ctx.globals.seed}} : Json::object();
  j["timings_seconds"] = {{"fit", elapsed}};
  fs::path side = model_path;
  side += ".pipeline.json";
  write_json(side, j);
  ctx.log("fitted rank " + std::to_string(model.rank()) + " model on " + std::to_string(y.columns()) +
          " snapshots of '" + a.field + "'");
}

struct PredictArgs {
  fs::path mesh;
  std::optional<double> until;
  std::optional<double> step;
  std::vector<double> times;
};

void cmd_dmd_predict(Context& ctx, const fs::path& model_path, const fs::path& out_dir, const PredictArgs& a) {
  if (a.until.has_value() == !a.times.empty()) throw UsageError("dmd predict needs exactly one of --until and --times");
  const dmd::DmdModel model = dmd::read_model(model_path);
  const auto grid = std::make_shared<const mesh::SimplicialMesh>(mesh::read_mesh(a.mesh));
  if (grid->num_nodes() != model.n)
    fail(ErrorKind::invalid_argument, "mesh has " + std::to_string(grid->num_nodes()) + " nodes, model has " +
                                          std::to_string(model.n));
  std::vector<double> times = a.times;
  if (a.until) {
    const double dt = a.step.value_or(model.dt);
    if (!(dt > 0.0)) throw UsageError("--step must be positive");
    // Times as (i0 + k) * dt when t0 sits on the grid, so they match stored times exactly.
    const double q = model.t0 / dt;
    const bool on_grid = std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, std::abs(q));
    for (long k = 0;; ++k) {
      const double t = on_grid ? (std::round(q) + static_cast<double>(k)) * dt : model.t0 + static_cast<double>(k) * dt;
      if (t > *a.until + 1e-9 * std::max(1.0, std::abs(*a.until))) break;
      times.push_back(t);
    }
    if (times.empty()) throw UsageError("--until lies before the model start time");
  }
  open_output_dir(ctx, out_dir, {model_path, a.mesh});
  const auto t0 = Clock::now();
  StoreWriter writer(out_dir);
  double imag = 0.0;
  for (double t : times) {
    const auto ev = dmd::evaluate(model, t);
    imag = std::max(imag, ev.imaginary_norm);
    fem::FieldTable table;
    table.names = {model.field_name};
    table.columns = {ev.values};
    writer.add(t, grid, table);
  }
  writer.finish();
  Json j = base_manifest(ctx, "dmd predict");
  j["inputs"] = {model_path.string(), a.mesh.string()};
  j["outputs"] = {"manifest.txt"};
  j["snapshots"] = writer.size();
  j["max_imaginary_norm"] = imag;
  j["seeds"] = Json::object();
  j["timings_seconds"] = {{"predict", seconds_since(t0)}};
  write_json(out_dir / "pipeline.json", j);
  commit_output_dir(ctx);
  ctx.log("wrote " + std::to_string(writer.size()) + " predicted snapshots");
}

// ---------------------------------------------------------------- reports

void cmd_report_errors(Context& ctx, const fs::path& truth_dir, const fs::path& approx_dir, const fs::path& csv,
                       const std::string& field, std::optional<double> split) {
  StoreReader truth(read_store(truth_dir));
  StoreReader approx(read_store(approx_dir));
  for (const StoreReader* r : {&truth, &approx})
    if (!r->store().uniform())
      fail(ErrorKind::invalid_plan, r->store().dir.string() + ": snapshots live on different meshes; project first");

  std::vector<std::vector<double>> tcols, acols;
  std::vector<double> times;
  std::size_t split_index = 0;
  for (std::size_t k = 0; k < approx.store().entries.size(); ++k) {
    const double t = approx.store().entries[k].time;
    const auto& te = truth.store().entries;
    const auto it = std::find_if(te.begin(), te.end(), [t](const StoreEntry& e) {
      return std::abs(e.time - t) <= 1e-9 * std::max(1.0, std::abs(t));
    });
    if (it == te.end()) fail(ErrorKind::not_found, "no truth snapshot at t = " + format_time(t));
    tcols.push_back(truth.fields(it->index).column(field));
    acols.push_back(approx.fields(k).column(field));
    if (tcols.back().size() != acols.back().size())
      fail(ErrorKind::invalid_argument, "truth and approximation have different node counts; project first");
    times.push_back(t);
    if (!split || t <= *split + 1e-9 * std::max(1.0, std::abs(*split))) split_index = k + 1;
  }
  const auto tm = linalg::Matrix::from_columns(tcols), am = linalg::Matrix::from_columns(acols);
  const auto rep = dmd::errors(tm, am, split_index);
  // eta_F over the reconstruction rows, or over everything when there are none.
  double eta_f = rep.eta_f;
  if (split_index > 0 && split_index < times.size()) {
    std::vector<std::vector<double>> tr(tcols.begin(), tcols.begin() + static_cast<long>(split_index));
    std::vector<std::vector<double>> ar(acols.begin(), acols.begin() + static_cast<long>(split_index));
    eta_f = dmd::errors(linalg::Matrix::from_columns(tr), linalg::Matrix::from_columns(ar), split_index).eta_f;
  }

  FileOutput out(ctx, csv, {truth_dir, approx_dir});
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < times.size(); ++k)
    rows.push_back(format_time(times[k]) + "," + (rep.eta[k] ? num(*rep.eta[k]) : std::string("nan")) + "," +
                   (k < split_index ? "reconstruction" : "prediction"));
  rows.push_back("eta_F," + num(eta_f));
  write_table(out.partial(), "time,eta,regime", rows);
  out.commit();
  ctx.log("eta_F = " + num(eta_f) + " over " + std::to_string(split_index > 0 ? split_index : times.size()) +
          " snapshots; " + std::to_string(times.size() - split_index) + " prediction rows");
}

struct QoiArgs {
  std::string kind = "population";
  std::string field = "u";
  double threshold = 0.5;
  int axis = 0;
};

void cmd_report_qoi(Context& ctx, const fs::path& store_dir, const fs::path& csv, const QoiArgs& a) {
  StoreReader reader(read_store(store_dir));
  const auto& entries = reader.store().entries;
  qoi::QoiSeries series;
  if (a.kind == "population") {
    std::vector<qoi::FieldSet> sets;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto table = reader.fields(k);
      qoi::FieldSet set;
      for (std::size_t c = 0; c < table.names.size(); ++c)
        set[table.names[c]] = fem::make_field(reader.mesh(k), table.columns[c], table.names[c]);
      sets.push_back(std::move(set));
    }
    series = qoi::total_population(reader.store().times(), sets);
  } else if (a.kind == "front" || a.kind == "center") {
    series.kind = a.kind == "front" ? "front_position" : "center_of_mass";
    if (a.axis < 0 || a.axis > 1) throw UsageError("--axis must be 0 or 1");
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto u = fem::make_field(reader.mesh(k), reader.fields(k).column(a.field), a.field);
      series.times.push_back(entries[k].time);
      try {
        series.values.push_back(a.kind == "front" ? qoi::front_position(u, a.threshold, a.axis)
                                                  : qoi::region_center_of_mass(u, a.threshold)[a.axis]);
      } catch (const Error& e) {
        throw Error(e.kind(), "snapshot " + std::to_string(k) + ": " + e.what());
      }
    }
  } else {
    throw UsageError("unknown --kind '" + a.kind + "' (population, front, center)");
  }
  FileOutput out(ctx, csv, {store_dir});
  qoi::write_csv(out.partial(), series);
  out.commit();
  ctx.log("wrote " + std::to_string(series.values.size()) + " " + series.kind + " values");
}

int exit_code_for(const Error& e) { return e.kind() == ErrorKind::parse ? kUsage : kRuntime; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  for (int k = 1; k < argc; ++k) ctx.args.emplace_back(argv[k]);

  CLI::App app{"Adaptive-mesh snapshot projection and dynamic mode decomposition", "amrdmd"};
  app.set_version_flag("--version", AMRDMD_VERSION);
  app.require_subcommand(1);
  auto* seed_opt = app.add_option("--seed", ctx.globals.seed, "Seed for randomized stages")->option_text("<u64>");
  app.add_flag("--force", ctx.globals.force, "Replace existing outputs");
  app.add_flag("--quiet", ctx.globals.quiet, "Only print errors");

  std::function<void()> action;

  std::string config, out_dir, store, target, model, truth, approx, csv;
  auto* sim = app.add_subcommand("simulate", "Run a generator from a config file into a snapshot store");
  sim->add_option("config", config, "Run configuration")->required();
  sim->add_option("out_dir", out_dir, "Output store")->required();
  sim->callback([&] { action = [&] { cmd_simulate(ctx, config, out_dir); }; });

  auto* demo = app.add_subcommand("demo", "Built-in demonstrations");
  demo->require_subcommand(1);
  auto* indicator = demo->add_subcommand("indicator", "Project an indicator function between non-nested meshes");
  indicator->add_option("out_dir", out_dir, "Output directory")->required();
  indicator->callback([&] { action = [&] { cmd_demo_indicator(ctx, out_dir); }; });

  auto* proj = app.add_subcommand("project", "L2-project every snapshot of a store onto one mesh");
  proj->add_option("store", store, "Input store")->required();
  proj->add_option("target_mesh", target, "Target mesh file")->required();
  proj->add_option("out_dir", out_dir, "Output store")->required();
  proj->callback([&] { action = [&] { cmd_project(ctx, store, target, out_dir); }; });

  auto* dmdc = app.add_subcommand("dmd", "Fit and evaluate DMD models");
  dmdc->require_subcommand(1);
  FitArgs fit;
  std::size_t rank = 0;
  double tau = 0.0;
  auto* fitc = dmdc->add_subcommand("fit", "Fit a model to a window of a uniform store");
  fitc->add_option("store", store, "Uniform store")->required();
  fitc->add_option("model", model, "Output model file")->required();
  fitc->add_option("--field", fit.field, "Field name")->capture_default_str();
  fitc->add_option("--from", fit.from, "First time of the training window");
  fitc->add_option("--to", fit.to, "Last time of the training window");
  auto* rank_opt = fitc->add_option("--rank", rank, "Fixed truncation rank");
  auto* tau_opt = fitc->add_option("--tau", tau, "Discarded-energy threshold");
  rank_opt->excludes(tau_opt);
  fitc->add_option("--svd", fit.svd, "exact or randomized")
      ->check(CLI::IsMember({"exact", "randomized"}))
      ->capture_default_str();
  fitc->add_option("--oversample", fit.oversample, "Randomized SVD oversampling")->capture_default_str();
  fitc->add_option("--power-iterations", fit.power_iterations, "Randomized SVD power iterations")
      ->capture_default_str();
  fitc->add_flag("--lsq-amplitudes", fit.lsq, "Fit amplitudes against all training snapshots");
  fitc->callback([&] {
    if (rank_opt->count()) fit.rank = rank;
    if (tau_opt->count()) fit.tau = tau;
    action = [&] { cmd_dmd_fit(ctx, store, model, fit); };
  });

  PredictArgs pred;
  double until = 0.0, step = 0.0;
  std::string mesh_path;
  auto* predc = dmdc->add_subcommand("predict", "Evaluate a model at given times into a store");
  predc->add_option("model", model, "Model file")->required();
  predc->add_option("out_dir", out_dir, "Output store")->required();
  predc->add_option("--mesh", mesh_path, "Mesh the model's rows live on")->required();
  auto* until_opt = predc->add_option("--until", until, "Evaluate from the model start up to this time");
  auto* step_opt = predc->add_option("--step", step, "Time step for --until (default: the model's)");
  auto* times_opt = predc->add_option("--times", pred.times, "Comma-separated times")->delimiter(',');
  until_opt->excludes(times_opt);
  step_opt->needs(until_opt);
  predc->callback([&] {
    pred.mesh = mesh_path;
    if (until_opt->count()) pred.until = until;
    if (step_opt->count()) pred.step = step;
    action = [&] { cmd_dmd_predict(ctx, model, out_dir, pred); };
  });

  auto* report = app.add_subcommand("report", "Error and quantity-of-interest reports");
  report->require_subcommand(1);
  std::string field = "u";
  double split = 0.0;
  auto* errc = report->add_subcommand("errors", "Relative errors of an approximation against a truth store");
  errc->add_option("truth", truth, "Truth store")->required();
  errc->add_option("approx", approx, "Approximation store")->required();
  errc->add_option("csv", csv, "Output CSV")->required();
  errc->add_option("--field", field, "Field name")->capture_default_str();
  auto* split_opt = errc->add_option("--split", split, "Last time of the reconstruction regime");
  errc->callback([&] {
    std::optional<double> s;
    if (split_opt->count()) s = split;
    action = [&, s] { cmd_report_errors(ctx, truth, approx, csv, field, s); };
  });

  QoiArgs qa;
  auto* qoic = report->add_subcommand("qoi", "Quantity-of-interest time series of a store");
  qoic->add_option("store", store, "Input store")->required();
  qoic->add_option("csv", csv, "Output CSV")->required();
  qoic->add_option("--kind", qa.kind, "population, front or center")->capture_default_str();
  qoic->add_option("--field", qa.field, "Field for front and center")->capture_default_str();
  qoic->add_option("--threshold", qa.threshold, "Level for front and center")->capture_default_str();
  qoic->add_option("--axis", qa.axis, "Coordinate axis for front and center")->capture_default_str();
  qoic->callback([&] { action = [&] { cmd_report_qoi(ctx, store, csv, qa); }; });

  app.fallthrough();
  for (auto* sub : {demo, dmdc, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  ctx.globals.seed_set = seed_opt->count() > 0;

  std::string message;
  int code = kOk;
  try {
    action();
  } catch (const UsageError& e) {
    message = e.what();
    code = kUsage;
  } catch (const SafetyError& e) {
    message = e.what();
    code = kFilesystem;
  } catch (const Error& e) {
    message = std::string(to_string(e.kind())) + ": " + e.what();
    code = exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    message = e.what();
    code = kRuntime;
  } catch (const std::exception& e) {
    message = e.what();
    code = kRuntime;
  }
  if (code != kOk) {
    err << "amrdmd: " << message << '\n';
    if (ctx.active_dir) std::ofstream(*ctx.active_dir / ".failed") << message << '\n';
  }
  return code;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"amrdmd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace amrdmd::pipeline
