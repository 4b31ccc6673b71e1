#pragma once

// Scenario configuration: YAML text -> validated lattice, partition,
// interaction, temperatures, initial-state recipe and time grids.
//
//   lattice:     { sites: 6, local_dim: 2 }        # local_dim may be a list
//   interaction: { preset: xx, coupling: 1.0 }     # xx | xxz | tfim | heisenberg | random | custom
//   partition:   { regions: [[2, 3], [0, 1], [4, 5]] }
//   betas:       [1.0, 0.5, 2.0]
//   initial_state: { kind: product_gibbs }         # or { kind: custom, matrix: [...] }
//   time_grid:   { start: 0, stop: 10, count: 50 }
//   horizons:    [1, 5, 20]
//   tolerances:  { subadditivity: 1e-10 }          # optional overrides
//   report:      { include_small_system: false, log_floor: 1e-14 }
//
// Custom matrices are row-major lists whose entries are numbers or [re, im].

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qspin/entropy_production.hpp"
#include "qspin/lattice.hpp"
#include "qspin/operators.hpp"
#include "qspin/presets.hpp"

namespace qspin {

/// Any problem with a scenario configuration.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& message, int line = -1)
      : Error(format(key, message, line)), key_(key), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& key, const std::string& message, int line) {
    std::string out = line >= 0 ? "line " + std::to_string(line) + ": " : std::string{};
    if (!key.empty()) out += "`" + key + "`: ";
    return out + message;
  }

  std::string key_;
  int line_;
};

/// Syntax or type errors, and unknown names.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Well-formed values that violate a module invariant.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

inline const std::vector<std::string>& known_presets() {
  static const std::vector<std::string> names{"xx", "xxz", "tfim", "heisenberg", "random", "custom"};
  return names;
}

struct InteractionSpec {
  std::string preset = "xx";
  double coupling = 1.0;
  double delta = 0.0;   // xxz
  double field = 1.0;   // tfim
  double scale = 0.5;   // random
  std::uint64_t seed = 0;
  std::vector<LocalTerm> custom_terms;

  Interaction build(const LatticeSpec& lattice) const {
    if (preset == "xx") return xx_chain(lattice, coupling);
    if (preset == "xxz") return xxz_chain(lattice, delta, coupling);
    if (preset == "heisenberg") return heisenberg_chain(lattice, coupling);
    if (preset == "tfim") return tfim_chain(lattice, field, coupling);
    if (preset == "random") return random_chain(lattice, seed, scale);
    return Interaction{custom_terms};
  }
};

struct TimeGrid {
  double start = 0;
  double stop = 0;
  std::size_t count = 0;

  /// `count` evenly spaced points from start to stop inclusive.
  std::vector<double> points() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(count == 1 ? start
                               : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
  }
};

struct ScenarioConfig {
  std::vector<int> local_dims;
  InteractionSpec interaction;
  std::vector<SiteSet> regions;
  std::vector<double> betas;
  std::string initial_state = "product_gibbs";
  Matrix custom_state;
  TimeGrid time_grid;
  std::vector<double> horizons;
  Tolerances tolerances;
  double log_floor = kLogFloor;
  bool include_small_system = false;
  std::string output_dir;

  LatticeSpec lattice() const { return LatticeSpec(local_dims); }
  Partition partition() const { return validate_partition(lattice(), Partition(regions)); }
};

/// Writable reference to a tolerance by field name.
inline double& tolerance_by_name(Tolerances& tol, const std::string& name) {
  static const std::map<std::string, double Tolerances::*> fields{
      {"subadditivity", &Tolerances::subadditivity},
      {"rates_vs_micro", &Tolerances::rates_vs_micro},
      {"h_vs_H", &Tolerances::h_vs_H},
      {"entropy_invariance", &Tolerances::entropy_invariance},
      {"energy_conservation", &Tolerances::energy_conservation},
      {"positivity", &Tolerances::positivity},
      {"relative_entropy_identity", &Tolerances::relative_entropy_identity},
      {"flux_nullity", &Tolerances::flux_nullity},
      {"derivative", &Tolerances::derivative},
      {"state_validity", &Tolerances::state_validity},
      {"cesaro_identity", &Tolerances::cesaro_identity},
  };
  const auto it = fields.find(name);
  if (it == fields.end()) {
    std::string known;
    for (const auto& [k, _] : fields) known += (known.empty() ? "" : ", ") + k;
    throw ParseError("tolerances." + name, "unknown tolerance (known: " + known + ")");
  }
  return tol.*(it->second);
}

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : -1; }

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ParseError(key, "expected a scalar", line_of(node));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(key, "cannot read '" + node.Scalar() + "'", line_of(node));
  }
}

template <class T>
std::vector<T> scalar_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ParseError(key, "expected a list", line_of(node));
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(scalar<T>(node[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

inline Complex complex_entry(const YAML::Node& node, const std::string& key) {
  if (node.IsSequence()) {
    if (node.size() != 2) throw ParseError(key, "complex entries are [re, im]", line_of(node));
    return {scalar<double>(node[0], key), scalar<double>(node[1], key)};
  }
  return {scalar<double>(node, key), 0.0};
}

/// Square matrix from a flat row-major list.
inline Matrix square_matrix(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ParseError(key, "expected a row-major list of entries", line_of(node));
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(node.size()))));
  if (n * n != static_cast<Eigen::Index>(node.size()) || n == 0)
    throw ParseError(key, std::to_string(node.size()) + " entries do not form a square matrix", line_of(node));
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      m(i, j) = complex_entry(node[k], key + "[" + std::to_string(k) + "]");
    }
  return m;
}

inline const YAML::Node required(const YAML::Node& parent, const std::string& name, const std::string& key) {
  const YAML::Node n = parent[name];
  if (!n) throw ParseError(key, "missing required key", line_of(parent));
  return n;
}

inline void reject_unknown_keys(const YAML::Node& map, const std::string& prefix,
                                std::initializer_list<std::string_view> allowed) {
  if (!map.IsMap()) throw ParseError(prefix, "expected a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto name = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
      throw ParseError(prefix.empty() ? name : prefix + "." + name, "unknown key", line_of(kv.first));
  }
}

/// "xxz(0.5)" -> ("xxz", "0.5")
inline std::pair<std::string, std::string> split_preset(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') return {text, {}};
  return {text.substr(0, open), text.substr(open + 1, text.size() - open - 2)};
}

inline InteractionSpec parse_interaction(const YAML::Node& node, const LatticeSpec& lattice) {
  reject_unknown_keys(node, "interaction", {"preset", "coupling", "delta", "field", "g", "seed", "scale", "terms"});
  InteractionSpec spec;
  const auto preset_node = required(node, "preset", "interaction.preset");
  auto [name, argument] = split_preset(scalar<std::string>(preset_node, "interaction.preset"));
  if (std::find(known_presets().begin(), known_presets().end(), name) == known_presets().end()) {
    std::string known;
    for (const auto& k : known_presets()) known += (known.empty() ? "" : ", ") + k;
    throw ParseError("interaction.preset", "unknown preset '" + name + "' (known: " + known + ")",
                     line_of(preset_node));
  }
  spec.preset = name;
  auto number = [&](const std::string& text) {
    try {
      return std::stod(text);
    } catch (const std::exception&) {
      throw ParseError("interaction.preset", "bad preset argument '" + text + "'", line_of(preset_node));
    }
  };
  if (!argument.empty()) {
    if (name == "xxz") spec.delta = number(argument);
    else if (name == "tfim") spec.field = number(argument);
    else if (name == "random") spec.seed = static_cast<std::uint64_t>(number(argument));
    else throw ParseError("interaction.preset", "preset '" + name + "' takes no argument", line_of(preset_node));
  }
  if (node["coupling"]) spec.coupling = scalar<double>(node["coupling"], "interaction.coupling");
  if (node["delta"]) spec.delta = scalar<double>(node["delta"], "interaction.delta");
  if (node["field"]) spec.field = scalar<double>(node["field"], "interaction.field");
  if (node["g"]) spec.field = scalar<double>(node["g"], "interaction.g");
  if (node["seed"]) spec.seed = scalar<std::uint64_t>(node["seed"], "interaction.seed");
  if (node["scale"]) spec.scale = scalar<double>(node["scale"], "interaction.scale");

  if (name == "custom") {
    const auto terms = required(node, "terms", "interaction.terms");
    if (!terms.IsSequence()) throw ParseError("interaction.terms", "expected a list", line_of(terms));
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string key = "interaction.terms[" + std::to_string(i) + "]";
      const auto support = scalar_list<std::size_t>(required(terms[i], "support", key + ".support"), key + ".support");
      const auto matrix = square_matrix(required(terms[i], "matrix", key + ".matrix"), key + ".matrix");
      try {
        LocalTerm term(support, matrix);
        (void)detail::checked_indexer(lattice, term.support(), term.matrix().rows());
        spec.custom_terms.push_back(std::move(term));
      } catch (const Error& e) {
        throw ValidationError(key, e.what(), line_of(terms[i]));
      }
    }
  } else {
    try {
      (void)spec.build(lattice);
    } catch (const Error& e) {
      throw ValidationError("interaction.preset", e.what(), line_of(preset_node));
    }
  }
  return spec;
}

}  // namespace detail

/// Parses and validates a scenario; errors name the offending key and line.
inline ScenarioConfig parse_config(std::string_view text) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("", e.msg, e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  if (!root.IsMap()) throw ParseError("", "top level must be a mapping");
  reject_unknown_keys(root, "", {"lattice", "interaction", "partition", "betas", "initial_state", "time_grid",
                                 "horizons", "tolerances", "report", "output"});

  ScenarioConfig cfg;
  const auto lat = required(root, "lattice", "lattice");
  reject_unknown_keys(lat, "lattice", {"sites", "local_dim"});
  const auto sites = scalar<std::size_t>(required(lat, "sites", "lattice.sites"), "lattice.sites");
  const auto dim_node = lat["local_dim"];
  if (!dim_node) cfg.local_dims.assign(sites, 2);
  else if (dim_node.IsSequence()) cfg.local_dims = scalar_list<int>(dim_node, "lattice.local_dim");
  else cfg.local_dims.assign(sites, scalar<int>(dim_node, "lattice.local_dim"));
  if (cfg.local_dims.size() != sites)
    throw ValidationError("lattice.local_dim", "has " + std::to_string(cfg.local_dims.size()) +
                                                   " entries for " + std::to_string(sites) + " sites",
                          line_of(dim_node));
  LatticeSpec lattice;
  try {
    lattice = cfg.lattice();
  } catch (const CapacityError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("lattice", e.what(), line_of(lat));
  }

  cfg.interaction = parse_interaction(required(root, "interaction", "interaction"), lattice);

  const auto part = required(root, "partition", "partition");
  reject_unknown_keys(part, "partition", {"regions"});
  const auto regions = required(part, "regions", "partition.regions");
  if (!regions.IsSequence()) throw ParseError("partition.regions", "expected a list of site lists", line_of(regions));
  for (std::size_t a = 0; a < regions.size(); ++a)
    cfg.regions.push_back(scalar_list<std::size_t>(regions[a], "partition.regions[" + std::to_string(a) + "]"));
  try {
    (void)cfg.partition();
  } catch (const Error& e) {
    throw ValidationError("partition.regions", e.what(), line_of(regions));
  }

  const auto betas = required(root, "betas", "betas");
  cfg.betas = scalar_list<double>(betas, "betas");
  if (cfg.betas.size() != cfg.regions.size())
    throw ValidationError("betas", "has " + std::to_string(cfg.betas.size()) + " values for " +
                                       std::to_string(cfg.regions.size()) + " regions",
                          line_of(betas));
  for (auto b : cfg.betas)
    if (!std::isfinite(b)) throw ValidationError("betas", "inverse temperatures must be finite", line_of(betas));

  if (const auto init = root["initial_state"]) {
    reject_unknown_keys(init, "initial_state", {"kind", "matrix"});
    cfg.initial_state = scalar<std::string>(required(init, "kind", "initial_state.kind"), "initial_state.kind");
    if (cfg.initial_state == "custom") {
      const auto m = required(init, "matrix", "initial_state.matrix");
      cfg.custom_state = square_matrix(m, "initial_state.matrix");
      if (static_cast<std::size_t>(cfg.custom_state.rows()) != lattice.dimension())
        throw ValidationError("initial_state.matrix", "dimension " + std::to_string(cfg.custom_state.rows()) +
                                                          " does not match the lattice dimension " +
                                                          std::to_string(lattice.dimension()),
                              line_of(m));
      try {
        (void)DensityMatrix(cfg.custom_state, 1e-10);
      } catch (const Error& e) {
        throw ValidationError("initial_state.matrix", e.what(), line_of(m));
      }
    } else if (cfg.initial_state != "product_gibbs") {
      throw ParseError("initial_state.kind", "unknown recipe '" + cfg.initial_state + "' (known: product_gibbs, custom)",
                       line_of(init["kind"]));
    }
  }

  if (const auto grid = root["time_grid"]) {
    reject_unknown_keys(grid, "time_grid", {"start", "stop", "count"});
    if (grid["start"]) cfg.time_grid.start = scalar<double>(grid["start"], "time_grid.start");
    if (grid["stop"]) cfg.time_grid.stop = scalar<double>(grid["stop"], "time_grid.stop");
    if (grid["count"]) cfg.time_grid.count = scalar<std::size_t>(grid["count"], "time_grid.count");
    if (cfg.time_grid.count > 1 && !(cfg.time_grid.stop > cfg.time_grid.start))
      throw ValidationError("time_grid", "stop must exceed start", line_of(grid));
  }
  if (const auto h = root["horizons"]) {
    cfg.horizons = scalar_list<double>(h, "horizons");
    for (auto t : cfg.horizons)
      if (!(t > 0) || !std::isfinite(t)) throw ValidationError("horizons", "horizons must be positive", line_of(h));
  }
  if (const auto tol = root["tolerances"]) {
    if (!tol.IsMap()) throw ParseError("tolerances", "expected a mapping", line_of(tol));
    for (const auto& kv : tol) {
      const auto name = kv.first.as<std::string>();
      double& slot = tolerance_by_name(cfg.tolerances, name);
      slot = scalar<double>(kv.second, "tolerances." + name);
    }
  }
  if (const auto rep = root["report"]) {
    reject_unknown_keys(rep, "report", {"include_small_system", "log_floor"});
    if (rep["include_small_system"])
      cfg.include_small_system = scalar<bool>(rep["include_small_system"], "report.include_small_system");
    if (rep["log_floor"]) {
      cfg.log_floor = scalar<double>(rep["log_floor"], "report.log_floor");
      if (!(cfg.log_floor > 0)) throw ValidationError("report.log_floor", "must be positive", line_of(rep["log_floor"]));
    }
  }
  if (const auto out = root["output"]) cfg.output_dir = scalar<std::string>(out, "output");
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("", "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace qspin
