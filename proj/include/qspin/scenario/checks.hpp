#pragma once

// Built-in invariant suite behind `qspin check`. Every outcome is named
// "<instance>/<invariant>" so a failure points at the broken identity.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qspin/entropy_production.hpp"
#include "qspin/presets.hpp"
#include "qspin/scenario/runner.hpp"

namespace qspin {

enum class CheckLevel { fast, full };

namespace detail {

class CheckLog {
 public:
  explicit CheckLog(std::vector<CheckOutcome>& out) : out_(out) {}

  void add(const std::string& instance, CheckOutcome c) {
    c.name = instance + "/" + c.name;
    out_.push_back(std::move(c));
  }

  /// Collapses repeated outcomes of one invariant into the worst one.
  void add_worst(const std::string& instance, const std::vector<CheckOutcome>& outcomes) {
    std::vector<CheckOutcome> worst;
    for (const auto& c : outcomes) {
      auto it = std::find_if(worst.begin(), worst.end(), [&](const CheckOutcome& w) { return w.name == c.name; });
      if (it == worst.end()) {
        worst.push_back(c);
      } else if (it->passed && !c.passed) {
        *it = c;
      } else if (it->passed == c.passed && std::abs(c.measured) > std::abs(it->measured)) {
        *it = c;
      }
    }
    for (auto& c : worst) add(instance, std::move(c));
  }

 private:
  std::vector<CheckOutcome>& out_;
};

inline LatticeSpec qubits(std::size_t n) { return LatticeSpec::uniform(n, 2); }

/// Small system in the middle, reservoirs left and right.
inline Partition three_way(std::size_t n, std::size_t small) {
  const std::size_t start = (n - small) / 2;
  std::vector<SiteSet> r(3);
  for (std::size_t i = 0; i < n; ++i) r[i < start ? 1 : i < start + small ? 0 : 2].push_back(i);
  return Partition(r);
}

inline void operator_checks(CheckLog& log, const Tolerances& tol) {
  const auto lat = qubits(5);
  const auto part = validate_partition(lat, three_way(5, 1));
  const auto inter = random_chain(lat, 11);
  const auto split = split_hamiltonian(inter, lat, part);
  const auto h = split.total();
  const double scale = std::max(1.0, h.max_norm());

  Matrix parts = split.coupling.matrix();
  for (const auto& r : split.region_terms) parts += r.matrix();
  log.add("operators", check_abs("split_identity", max_norm(h.matrix() - parts), 1e-14 * scale));
  log.add("operators", check_abs("term_order_assembly",
                                 max_norm(h.matrix() - assemble_hamiltonian(inter, lat).matrix()), 1e-12 * scale));

  // sum_a i[H, H_a] = -i[H, h]
  Matrix flux_sum = Matrix::Zero(h.matrix().rows(), h.matrix().cols());
  double herm = 0;
  for (std::size_t a = 0; a < part.num_regions(); ++a) {
    const auto f = flux_operator(split, a);
    herm = std::max(herm, hermiticity_defect(f.matrix()));
    flux_sum += f.matrix();
    // i[H, H_a] = i[h, H_a] because the H_b commute with H_a
    log.add("operators", check_abs("flux_via_coupling[" + std::to_string(a) + "]",
                                   max_norm(f.matrix() - flux_operator_via_coupling(split, a).matrix()),
                                   tol.flux_nullity * scale * scale));
  }
  flux_sum += i_commutator(h, split.coupling).matrix();
  log.add("operators", check_abs("flux_sum_rule", max_norm(flux_sum), tol.flux_nullity * scale * scale));
  log.add("operators", check_abs("flux_hermiticity", herm, kHermitianTolerance * scale * scale));
}

inline void state_checks(CheckLog& log, const Tolerances& tol) {
  const auto lat = qubits(4);
  const auto part = validate_partition(lat, Partition({{1, 2}, {0}, {3}}));
  const auto h = assemble_hamiltonian(random_chain(lat, 5), lat);
  const auto rho = gibbs(h, 0.7);
  const auto d = state_defects(rho.matrix());
  log.add("states", check_abs("gibbs_validity", std::max({d.hermiticity, std::abs(d.trace), std::max(0.0, -d.min_eigenvalue)}),
                              tol.state_validity));

  std::vector<DensityMatrix> marg;
  double trace_defect = 0;
  for (std::size_t a = 0; a < part.num_regions(); ++a) {
    marg.push_back(partial_trace(rho, lat, part, a));
    trace_defect = std::max(trace_defect, std::abs(marg.back().matrix().trace().real() - 1.0));
  }
  log.add("states", check_abs("partial_trace_normalization", trace_defect, tol.state_validity));

  const auto prod = product_state(marg, lat, part);
  double roundtrip = 0;
  for (std::size_t a = 0; a < part.num_regions(); ++a)
    roundtrip = std::max(roundtrip, max_norm(partial_trace(prod, lat, part, a).matrix() - marg[a].matrix()));
  log.add("states", check_abs("product_marginals", roundtrip, tol.state_validity));

  double gap = -von_neumann_entropy(rho);
  for (const auto& m : marg) gap += von_neumann_entropy(m);
  log.add("states", check_lower("subadditivity", gap, tol.subadditivity));
  log.add("states", check_lower("klein_inequality", relative_entropy(rho, prod), tol.positivity));
  log.add("states", check_abs("relative_entropy_mutual_information", relative_entropy(rho, prod) - gap,
                              tol.relative_entropy_identity));
}

inline void dynamics_checks(CheckLog& log, const Tolerances& tol) {
  const auto lat = qubits(5);
  const auto part = three_way(5, 1);
  const auto model = build_model(lat, part, random_chain(lat, 3));
  const auto psi0 = product_gibbs(model, {1.0, 0.5, 2.0});
  const Trajectory traj(psi0, model.cache);
  const double scale = std::max(1.0, model.hamiltonian_norm());

  double validity = 0;
  for (double t : {0.3, 2.0, 17.0}) {
    const auto d = state_defects(traj.at(t).matrix());
    validity = std::max({validity, d.hermiticity, std::abs(d.trace), std::max(0.0, -d.min_eigenvalue)});
  }
  log.add("dynamics", check_abs("evolved_state_validity", validity, tol.state_validity));
  log.add("dynamics", check_abs("eigendecomposition_reconstruction", model.cache.reconstruction_error(),
                                1e-10 * scale));

  // d/dT [T * cesaro(T)] = psi(T)
  const double horizon = 3.0, dt = 1e-3;
  const Matrix deriv = ((horizon + dt) * traj.cesaro(horizon + dt).matrix() -
                        (horizon - dt) * traj.cesaro(horizon - dt).matrix()) / (2 * dt);
  log.add("dynamics", check_abs("cesaro_derivative", max_norm(deriv - traj.at(horizon).matrix()), tol.derivative));

  const auto stationary = traj.dephased();
  log.add("dynamics", check_abs("dephased_stationarity",
                                max_norm(commutator(model.hamiltonian, stationary.as_operator()).matrix()),
                                tol.flux_nullity * scale * scale));
}

inline void entropy_production_checks(CheckLog& log, const Tolerances& tol) {
  // Every per-point cross-check along a 6-qubit XX trajectory.
  const auto lat = qubits(6);
  const auto model = build_model(lat, three_way(6, 2), xx_chain(lat));
  const std::vector<double> betas{1.0, 0.5, 2.0};
  const auto psi0 = product_gibbs(model, betas);
  ReportOptions options;
  options.tolerances = tol;
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(0.5 * i);
  const auto reports = full_report(psi0, model, betas, grid, options);
  std::vector<CheckOutcome> all;
  for (const auto& r : reports) all.insert(all.end(), r.checks.begin(), r.checks.end());
  log.add_worst("xx6", all);

  // e_micro = dD/dt by central differences on an 8-qubit chain. The O(dt^2)
  // truncation error peaks where the marginals change fastest, so the
  // outcome is the 90th-percentile error over 50 grid points.
  {
    const auto lat8 = qubits(8);
    const auto m8 = build_model(lat8, three_way(8, 2), xx_chain(lat8));
    const Trajectory traj(product_gibbs(m8, betas), m8.cache);
    const double dt = 1e-3;
    std::vector<double> errors;
    for (int i = 1; i < 50; ++i) {
      const double t = 10.0 * i / 49;
      const double dd = (subadditivity_gap(traj.at(t + dt), m8.lattice, m8.partition) -
                         subadditivity_gap(traj.at(t - dt), m8.lattice, m8.partition)) / (2 * dt);
      const auto e = ep_micro(traj.at(t), m8.split.coupling, m8.lattice, m8.partition);
      if (e.floored_regions.empty()) errors.push_back(std::abs(e.value - dd));
    }
    std::sort(errors.begin(), errors.end());
    const std::size_t k = (9 * errors.size() + 9) / 10;  // ceil(0.9 n)
    const double p90 = errors.empty() ? 0.0 : errors[k - 1];
    log.add("xx8", check_abs("derivative_identity", p90, tol.derivative));
  }

  // Averaged positivity and the relative-entropy identity on random couplings.
  std::vector<CheckOutcome> averaged;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto m = build_model(lat, Partition({{2, 3}, {0, 1}, {4, 5}}), random_chain(lat, seed));
    const auto p0 = product_gibbs(m, betas);
    const Trajectory tr(p0, m.cache);
    for (double horizon : {1.0, 5.0, 20.0}) {
      const double e = ep_thermo_averaged(p0, m, betas, horizon);
      averaged.push_back(check_lower("positivity", e, tol.positivity));
      averaged.push_back(
          check_abs("relative_entropy_identity", e - relative_entropy(tr.at(horizon), p0) / horizon,
                    tol.relative_entropy_identity));
    }
    const auto stationary = tr.dephased();
    const double h2 = m.hamiltonian_norm() * m.hamiltonian_norm();
    for (double f : region_fluxes(stationary, m.fluxes))
      averaged.push_back(check_abs("flux_nullity", f, tol.flux_nullity * h2));
  }
  log.add_worst("random6", averaged);
}

/// A scenario run through the same path as `qspin run`, collapsed per invariant.
inline void scenario_checks(CheckLog& log, const std::string& instance, const ScenarioConfig& cfg) {
  const auto result = evaluate_scenario(cfg);
  std::vector<CheckOutcome> all;
  for (const auto& r : result.timeseries) all.insert(all.end(), r.checks.begin(), r.checks.end());
  for (auto c : result.summary.checks) {
    c.name = c.name.substr(0, c.name.find('['));
    all.push_back(std::move(c));
  }
  log.add_worst(instance, all);
}

inline ScenarioConfig xx_scenario(std::size_t n, std::size_t small, std::size_t points, double stop,
                                  std::vector<double> horizons, const Tolerances& tol) {
  ScenarioConfig cfg;
  cfg.local_dims.assign(n, 2);
  cfg.interaction.preset = "xx";
  cfg.regions = three_way(n, small).regions();
  cfg.betas = {1.0, 0.5, 2.0};
  cfg.time_grid = {0.0, stop, points};
  cfg.horizons = std::move(horizons);
  cfg.tolerances = tol;
  return cfg;
}

}  // namespace detail

/// Runs the invariant suite; `fast` takes seconds, `full` adds 8- and 10-qubit scenarios.
inline std::vector<CheckOutcome> run_checks(CheckLevel level, const Tolerances& tol = {}) {
  std::vector<CheckOutcome> out;
  detail::CheckLog log(out);
  detail::operator_checks(log, tol);
  detail::state_checks(log, tol);
  detail::dynamics_checks(log, tol);
  detail::entropy_production_checks(log, tol);
  if (level == CheckLevel::full) {
    detail::scenario_checks(log, "xx8", detail::xx_scenario(8, 2, 50, 10.0, {1.0, 5.0, 20.0}, tol));
    detail::scenario_checks(log, "xx10", detail::xx_scenario(10, 2, 3, 4.0, {5.0}, tol));
  }
  return out;
}

}  // namespace qspin
