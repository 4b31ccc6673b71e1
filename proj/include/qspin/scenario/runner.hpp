#pragma once

// Scenario execution and parameter sweeps on top of the entropy-production
// routines. Output is CSV only.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qspin/entropy_production.hpp"
#include "qspin/parallel.hpp"
#include "qspin/scenario/config.hpp"
#include "qspin/scenario/csv.hpp"

namespace qspin {

struct HorizonSummary {
  double horizon = 0;
  double e_thermo_averaged = 0;      // (1/T) sum_a beta_a dE_a, a = 0 included
  double relative_entropy_rate = 0;  // S(psi(T) || psi0) / T
  std::vector<double> flux_averages;  // Tr(cesaro(T) F_a) = dE_a / T
};

struct ScenarioSummary {
  std::size_t dimension = 0;
  std::size_t regions = 0;
  std::size_t time_points = 0;
  double hamiltonian_norm = 0;
  std::vector<HorizonSummary> horizons;
  double dephased_e_thermo = 0;
  std::vector<double> dephased_fluxes;
  std::vector<CheckOutcome> checks;  // scenario-level; per-point checks live in the reports
  std::size_t checks_passed = 0;
  std::size_t checks_failed = 0;
  std::vector<std::string> failed_checks;  // distinct names, first-failure order
};

struct ScenarioResult {
  std::vector<EPReport> timeseries;
  ScenarioSummary summary;
};

/// Averaging horizons of a scenario: the explicit list, else the grid end.
inline std::vector<double> effective_horizons(const ScenarioConfig& cfg) {
  if (!cfg.horizons.empty()) return cfg.horizons;
  if (cfg.time_grid.count > 0 && cfg.time_grid.stop > 0) return {cfg.time_grid.stop};
  return {};
}

inline Model build_model(const ScenarioConfig& cfg) {
  const auto lattice = cfg.lattice();
  return build_model(lattice, cfg.partition(), cfg.interaction.build(lattice));
}

inline DensityMatrix initial_state(const ScenarioConfig& cfg, const Model& model) {
  if (cfg.initial_state == "custom") return DensityMatrix(cfg.custom_state, 1e-10);
  return product_gibbs(model, cfg.betas);
}

/// Runs a scenario in memory; `threads` bounds the time-point fan-out.
inline ScenarioResult evaluate_scenario(const ScenarioConfig& cfg, unsigned threads = thread_budget()) {
  const Model model = build_model(cfg);
  const DensityMatrix psi0 = initial_state(cfg, model);
  const auto& tol = cfg.tolerances;
  const std::size_t m = model.num_regions();

  ReportOptions options;
  options.log_floor = cfg.log_floor;
  options.include_small_system = cfg.include_small_system;
  options.tolerances = tol;
  options.threads = threads;

  ScenarioResult result;
  result.timeseries = full_report(psi0, model, cfg.betas, cfg.time_grid.points(), options);

  auto& s = result.summary;
  s.dimension = model.dimension();
  s.regions = m;
  s.time_points = result.timeseries.size();
  s.hamiltonian_norm = model.hamiltonian_norm();
  const double h2 = s.hamiltonian_norm * s.hamiltonian_norm;
  const bool product = cfg.initial_state == "product_gibbs";

  const Trajectory trajectory(psi0, model.cache);
  for (double horizon : effective_horizons(cfg)) {
    HorizonSummary hs;
    hs.horizon = horizon;
    hs.e_thermo_averaged = ep_thermo_averaged(psi0, model, cfg.betas, horizon);
    hs.relative_entropy_rate = relative_entropy(trajectory.at(horizon), psi0, cfg.log_floor) / horizon;
    const auto average = trajectory.cesaro(horizon);
    hs.flux_averages = region_fluxes(average, model.fluxes);
    double via_fluxes = 0;
    for (std::size_t a = 0; a < m; ++a) via_fluxes += cfg.betas[a] * hs.flux_averages[a];

    const std::string tag = "[T=" + csv::number(horizon) + "]";
    s.checks.push_back(check_abs("cesaro_identity" + tag, via_fluxes - hs.e_thermo_averaged,
                                 tol.cesaro_identity * std::max(1.0, std::abs(hs.e_thermo_averaged))));
    if (product) {
      s.checks.push_back(check_lower("positivity" + tag, hs.e_thermo_averaged, tol.positivity));
      s.checks.push_back(check_abs("relative_entropy_identity" + tag,
                                   hs.e_thermo_averaged - hs.relative_entropy_rate, tol.relative_entropy_identity));
    }
    s.horizons.push_back(std::move(hs));
  }

  const auto stationary = trajectory.dephased();
  s.dephased_fluxes = region_fluxes(stationary, model.fluxes);
  s.dephased_e_thermo = ep_thermo(stationary, model.fluxes, cfg.betas, cfg.include_small_system);
  double balance = 0;
  for (std::size_t a = 0; a < m; ++a) {
    balance += s.dephased_fluxes[a];
    s.checks.push_back(check_abs("flux_nullity[" + std::to_string(a) + "]", s.dephased_fluxes[a],
                                 tol.flux_nullity * h2));
  }
  s.checks.push_back(check_abs("flux_balance", balance, tol.flux_nullity * h2));

  auto tally = [&](const CheckOutcome& c) {
    if (c.passed) {
      ++s.checks_passed;
      return;
    }
    ++s.checks_failed;
    if (std::find(s.failed_checks.begin(), s.failed_checks.end(), c.name) == s.failed_checks.end())
      s.failed_checks.push_back(c.name);
  };
  for (const auto& r : result.timeseries)
    for (const auto& c : r.checks) tally(c);
  for (const auto& c : s.checks) tally(c);
  return result;
}

inline void write_summary(std::ostream& out, const ScenarioSummary& s) {
  out << "quantity,value\n";
  auto row = [&](const std::string& key, const std::string& value) { out << key << ',' << value << '\n'; };
  row("dimension", std::to_string(s.dimension));
  row("regions", std::to_string(s.regions));
  row("time_points", std::to_string(s.time_points));
  row("hamiltonian_norm", csv::number(s.hamiltonian_norm));
  for (const auto& h : s.horizons) {
    const std::string prefix = "T=" + csv::number(h.horizon) + "/";
    row(prefix + "e_thermo_averaged", csv::number(h.e_thermo_averaged));
    row(prefix + "relative_entropy_rate", csv::number(h.relative_entropy_rate));
    for (std::size_t a = 0; a < h.flux_averages.size(); ++a)
      row(prefix + "flux_avg_region_" + std::to_string(a), csv::number(h.flux_averages[a]));
  }
  row("dephased/e_thermo", csv::number(s.dephased_e_thermo));
  for (std::size_t a = 0; a < s.dephased_fluxes.size(); ++a)
    row("dephased/flux_region_" + std::to_string(a), csv::number(s.dephased_fluxes[a]));
  row("checks_passed", std::to_string(s.checks_passed));
  row("checks_failed", std::to_string(s.checks_failed));
  row("failed_checks", csv::join(s.failed_checks, ';'));
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

/// Evaluates the scenario and writes timeseries.csv and summary.csv into `out_dir`.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                                   unsigned threads = thread_budget()) {
  auto result = evaluate_scenario(cfg, threads);
  std::filesystem::create_directories(out_dir);
  {
    auto out = open_output(out_dir / "timeseries.csv");
    csv::write_timeseries(out, result.timeseries, result.summary.regions);
  }
  {
    auto out = open_output(out_dir / "summary.csv");
    write_summary(out, result.summary);
  }
  return result;
}

// ---------------------------------------------------------------- sweeps

enum class SweepParam { reservoir_size, boundary_offset, horizon_T, beta_gap };

inline const std::map<std::string, SweepParam>& sweep_params() {
  static const std::map<std::string, SweepParam> names{{"reservoir_size", SweepParam::reservoir_size},
                                                       {"boundary_offset", SweepParam::boundary_offset},
                                                       {"horizon_T", SweepParam::horizon_T},
                                                       {"beta_gap", SweepParam::beta_gap}};
  return names;
}

inline SweepParam parse_sweep_param(const std::string& name) {
  const auto it = sweep_params().find(name);
  if (it != sweep_params().end()) return it->second;
  std::string known;
  for (const auto& [k, _] : sweep_params()) known += (known.empty() ? "" : ", ") + k;
  throw ParseError("param", "unknown sweep parameter '" + name + "' (known: " + known + ")");
}

inline std::string sweep_param_name(SweepParam p) {
  for (const auto& [k, v] : sweep_params())
    if (v == p) return k;
  return {};
}

struct SweepSpec {
  SweepParam param = SweepParam::reservoir_size;
  std::vector<double> values;
  ScenarioConfig base;
};

/// Values must be non-empty and strictly monotone; site-valued parameters integral.
inline void validate_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw ValidationError("values", "sweep needs at least one value");
  const bool up = spec.values.size() < 2 || spec.values[1] > spec.values[0];
  for (std::size_t i = 1; i < spec.values.size(); ++i)
    if (up ? !(spec.values[i] > spec.values[i - 1]) : !(spec.values[i] < spec.values[i - 1]))
      throw ValidationError("values", "sweep values must be strictly monotone");
  if (spec.param == SweepParam::reservoir_size || spec.param == SweepParam::boundary_offset)
    for (double v : spec.values)
      if (v != std::round(v)) throw ValidationError("values", "site counts and offsets must be integers");
}

namespace detail {

/// Rebuilds a three-region chain: left reservoir [0, start), small system
/// [start, start + small), right reservoir [start + small, n).
inline ScenarioConfig chain_layout(const ScenarioConfig& base, std::size_t n, std::ptrdiff_t start) {
  if (base.regions.size() != 3)
    throw ValidationError("partition.regions", "geometric sweeps need exactly three regions (small, left, right)");
  if (base.interaction.preset == "custom")
    throw ValidationError("interaction.preset", "geometric sweeps need a preset interaction");
  if (base.initial_state != "product_gibbs")
    throw ValidationError("initial_state.kind", "geometric sweeps need a product_gibbs initial state");
  if (std::adjacent_find(base.local_dims.begin(), base.local_dims.end(), std::not_equal_to<>()) !=
      base.local_dims.end())
    throw ValidationError("lattice.local_dim", "geometric sweeps need a uniform local dimension");
  const std::size_t small = base.regions[0].size();
  if (start < 1 || static_cast<std::size_t>(start) + small >= n)
    throw ValidationError("partition.regions", "both reservoirs must keep at least one site");
  const auto s = static_cast<std::size_t>(start);

  ScenarioConfig cfg = base;
  cfg.local_dims.assign(n, base.local_dims.front());
  cfg.regions.assign(3, {});
  for (std::size_t i = 0; i < n; ++i) cfg.regions[i < s ? 1 : i < s + small ? 0 : 2].push_back(i);
  (void)cfg.lattice();  // capacity check
  return cfg;
}

}  // namespace detail

/// The scenario for one sweep value.
inline ScenarioConfig instantiate(const SweepSpec& spec, double value) {
  const auto& base = spec.base;
  switch (spec.param) {
    case SweepParam::reservoir_size: {
      if (value < 1) throw ValidationError("values", "reservoir size must be at least 1");
      const auto k = static_cast<std::size_t>(value);
      return detail::chain_layout(base, 2 * k + base.regions.at(0).size(), static_cast<std::ptrdiff_t>(k));
    }
    case SweepParam::boundary_offset: {
      const std::size_t n = base.local_dims.size();
      const std::size_t small = base.regions.at(0).size();
      const auto centred = static_cast<std::ptrdiff_t>((n - small) / 2);
      return detail::chain_layout(base, n, centred + static_cast<std::ptrdiff_t>(value));
    }
    case SweepParam::horizon_T: {
      if (!(value > 0)) throw ValidationError("values", "horizons must be positive");
      ScenarioConfig cfg = base;
      cfg.horizons = {value};
      return cfg;
    }
    case SweepParam::beta_gap: {
      if (base.betas.size() < 3) throw ValidationError("betas", "beta_gap needs two reservoirs");
      ScenarioConfig cfg = base;
      const double mean = 0.5 * (base.betas[1] + base.betas[2]);
      cfg.betas[1] = mean + 0.5 * value;
      cfg.betas[2] = mean - 0.5 * value;
      return cfg;
    }
  }
  throw Error("unhandled sweep parameter");
}

struct SweepRow {
  double value = 0;
  std::size_t dimension = 0;
  double horizon = std::numeric_limits<double>::quiet_NaN();
  double e_thermo_averaged = std::numeric_limits<double>::quiet_NaN();
  double relative_entropy_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> flux_averages;
  double gap_final = std::numeric_limits<double>::quiet_NaN();      // |e_micro(h) - e_thermo| at the last grid time
  double gap_mean_abs = std::numeric_limits<double>::quiet_NaN();   // same, averaged over the grid
  double subadditivity_final = std::numeric_limits<double>::quiet_NaN();
  double min_subadditivity = std::numeric_limits<double>::quiet_NaN();
  double max_h_vs_H = std::numeric_limits<double>::quiet_NaN();
  bool positivity_ok = false;
  std::size_t checks_failed = 0;
  std::string error;
};

inline SweepRow sweep_row(double value, const ScenarioConfig& cfg, unsigned threads) {
  SweepRow row;
  row.value = value;
  const auto result = evaluate_scenario(cfg, threads);
  const auto& s = result.summary;
  row.dimension = s.dimension;
  row.checks_failed = s.checks_failed;
  if (!s.horizons.empty()) {
    const auto& h = s.horizons.back();
    row.horizon = h.horizon;
    row.e_thermo_averaged = h.e_thermo_averaged;
    row.relative_entropy_rate = h.relative_entropy_rate;
    row.flux_averages = h.flux_averages;
  }
  row.positivity_ok = cfg.initial_state == "product_gibbs";
  for (const auto& h : s.horizons) row.positivity_ok = row.positivity_ok && h.e_thermo_averaged >= -cfg.tolerances.positivity;
  const auto& ts = result.timeseries;
  if (!ts.empty()) {
    double sum = 0;
    row.min_subadditivity = std::numeric_limits<double>::infinity();
    row.max_h_vs_H = 0;
    for (const auto& r : ts) {
      sum += std::abs(r.e_micro_h.value - r.e_thermo);
      row.min_subadditivity = std::min(row.min_subadditivity, r.subadditivity_gap);
      row.max_h_vs_H = std::max(row.max_h_vs_H, std::abs(r.e_micro_h.value - r.e_micro_H.value));
    }
    row.gap_final = std::abs(ts.back().e_micro_h.value - ts.back().e_thermo);
    row.gap_mean_abs = sum / static_cast<double>(ts.size());
    row.subadditivity_final = ts.back().subadditivity_gap;
  }
  return row;
}

/// One row per value, in value order. A failing value fills `error` and the sweep continues.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads = thread_budget()) {
  validate_sweep(spec);
  const std::size_t n = spec.values.size();
  const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  const unsigned inner = outer > 1 ? 1u : threads;
  return parallel_map<SweepRow>(
      n,
      [&](std::size_t i) {
        const double v = spec.values[i];
        try {
          return sweep_row(v, instantiate(spec, v), inner);
        } catch (const std::exception& e) {
          SweepRow row;
          row.value = v;
          row.error = e.what();
          return row;
        }
      },
      outer);
}

inline std::vector<std::string> sweep_columns(std::size_t regions) {
  std::vector<std::string> cols{"param", "value", "dimension", "horizon_T", "e_thermo_averaged",
                                "relative_entropy_rate"};
  for (std::size_t a = 0; a < regions; ++a) cols.push_back("flux_avg_region_" + std::to_string(a));
  cols.insert(cols.end(), {"gap_micro_thermo_final", "gap_micro_thermo_mean_abs", "subadditivity_gap_final",
                           "min_subadditivity_gap", "max_h_vs_H", "positivity_ok", "checks_failed", "error"});
  return cols;
}

/// Error text made safe for one CSV cell.
inline std::string csv_text(std::string text) {
  for (auto& c : text)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  return text;
}

inline void write_sweep(std::ostream& out, SweepParam param, const std::vector<SweepRow>& rows,
                        std::size_t regions) {
  out << csv::join(sweep_columns(regions)) << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> cells{sweep_param_name(param), csv::number(r.value), std::to_string(r.dimension),
                                   csv::number(r.horizon), csv::number(r.e_thermo_averaged),
                                   csv::number(r.relative_entropy_rate)};
    for (std::size_t a = 0; a < regions; ++a)
      cells.push_back(a < r.flux_averages.size() ? csv::number(r.flux_averages[a]) : "nan");
    cells.insert(cells.end(), {csv::number(r.gap_final), csv::number(r.gap_mean_abs),
                               csv::number(r.subadditivity_final), csv::number(r.min_subadditivity),
                               csv::number(r.max_h_vs_H), r.positivity_ok ? "1" : "0",
                               std::to_string(r.checks_failed), csv_text(r.error)});
    out << csv::join(cells) << '\n';
  }
}

/// run_sweep plus sweep.csv in `out_dir`.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                                       unsigned threads = thread_budget()) {
  auto rows = run_sweep(spec, threads);
  std::filesystem::create_directories(out_dir);
  auto out = open_output(out_dir / "sweep.csv");
  write_sweep(out, spec.param, rows, spec.base.regions.size());
  return rows;
}

}  // namespace qspin
