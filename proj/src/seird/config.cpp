#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "amrdmd/error.hpp"
#include "amrdmd/seird.hpp"

namespace amrdmd::seird {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& where, const std::string& what) { fail(ErrorKind::parse, where + ": " + what); }

double to_double(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(where, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) bad(where, "expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    bad(where, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) bad(where, "expected an integer, got '" + v + "'");
  return x;
}

// "0.95, 0.8, 0.6@0.4" - a@b stands for the pair a e^{+-ib}.
std::vector<linalg::Complex> to_eigenvalues(const std::string& v, const std::string& where) {
  std::vector<linalg::Complex> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad(where, "empty eigenvalue entry");
    const auto at = item.find('@');
    if (at == std::string::npos) {
      out.emplace_back(to_double(item, where), 0.0);
    } else {
      const double rho = to_double(trim(item.substr(0, at)), where);
      const double theta = to_double(trim(item.substr(at + 1)), where);
      out.push_back(std::polar(rho, theta));
      out.push_back(std::polar(rho, -theta));
    }
  }
  if (out.empty()) bad(where, "no eigenvalues given");
  return out;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
  const auto real = [&](const char* key, double& field) {
    setters[key] = [&field](const std::string& v, const std::string& w) { field = to_double(v, w); };
  };
  const auto integer = [&](const char* key, int& field) {
    setters[key] = [&field](const std::string& v, const std::string& w) { field = static_cast<int>(to_long(v, w)); };
  };
  auto& p = cfg.params;
  real("beta_i", p.beta_i);
  real("beta_e", p.beta_e);
  real("alpha", p.alpha);
  real("gamma_e", p.gamma_e);
  real("gamma_i", p.gamma_i);
  real("delta", p.delta);
  real("nu_s", p.nu_s);
  real("nu_e", p.nu_e);
  real("nu_i", p.nu_i);
  real("nu_r", p.nu_r);
  real("allee", p.allee);
  real("dt", p.dt);
  real("dt_o", p.dt_o);
  real("t_end", p.t_end);
  auto& a = cfg.policy;
  integer("initial_elements", a.initial_elements);
  integer("initial_uniform_levels", a.initial_uniform_levels);
  integer("remesh_every", a.remesh_every);
  real("refine_fraction", a.refine_fraction);
  real("coarsen_fraction", a.coarsen_fraction);
  integer("max_level", a.max_level);
  real("picard_tolerance", cfg.solver.picard_tolerance);
  integer("picard_max_iter", cfg.solver.picard_max_iter);
  setters["generator"] = [&cfg](const std::string& v, const std::string& w) {
    if (v != "seird" && v != "linear") bad(w, "generator must be 'seird' or 'linear'");
    cfg.generator = v;
  };
  setters["eigenvalues"] = [&cfg](const std::string& v, const std::string& w) { cfg.eigenvalues = to_eigenvalues(v, w); };
  setters["n"] = [&cfg](const std::string& v, const std::string& w) {
    const long x = to_long(v, w);
    if (x < 1) bad(w, "n must be positive");
    cfg.n = static_cast<std::size_t>(x);
  };
  setters["m"] = [&cfg](const std::string& v, const std::string& w) {
    const long x = to_long(v, w);
    if (x < 1) bad(w, "m must be positive");
    cfg.m = static_cast<std::size_t>(x);
  };
  setters["seed"] = [&cfg](const std::string& v, const std::string& w) {
    std::size_t used = 0;
    try {
      cfg.seed = std::stoull(v, &used);
    } catch (const std::exception&) {
      bad(w, "bad seed '" + v + "'");
    }
    if (used != v.size()) bad(w, "bad seed '" + v + "'");
    cfg.seed_set = true;
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad(where, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) bad(where, "expected 'key = value'");
    const auto it = setters.find(key);
    if (it == setters.end()) bad(where, "unknown key '" + key + "'");
    if (cfg.entries.count(key)) bad(where, "duplicate key '" + key + "'");
    it->second(value, where);
    cfg.entries[key] = value;
  }
  if (cfg.entries.empty()) fail(ErrorKind::parse, source + ": configuration is empty");

  try {
    if (cfg.generator == "seird") {
      cfg.params.check();
      cfg.policy.check();
      if (cfg.solver.picard_max_iter < 1 || !(cfg.solver.picard_tolerance > 0.0))
        fail(ErrorKind::invalid_argument, "picard settings must be positive");
    } else {
      if (cfg.eigenvalues.empty() || cfg.n == 0 || cfg.m == 0)
        fail(ErrorKind::invalid_argument, "linear generator needs eigenvalues, n and m");
      if (!(cfg.params.dt_o > 0.0)) fail(ErrorKind::invalid_argument, "dt_o must be positive");
    }
  } catch (const Error& e) {
    fail(ErrorKind::parse, source + ": " + e.what());
  }
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
  return parse_config(in, path.string());
}

}  // namespace amrdmd::seird
