#pragma once

// Three routes to the entropy production of a partitioned finite system:
//
//   per-region rates      -i Tr(psi [h, 1 (x) log psi_a])
//   microscopic formula   -i Tr(psi [h, log (x)_a psi_a])   (h or H as generator)
//   thermodynamic formula sum_a beta_a Tr(psi i[H, H_a])
//
// plus the time-averaged thermodynamic form (1/T) sum_a beta_a (E_a(T) - E_a(0)).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qspin/dynamics.hpp"
#include "qspin/lattice.hpp"
#include "qspin/operators.hpp"
#include "qspin/parallel.hpp"
#include "qspin/state.hpp"

namespace qspin {

/// Thresholds for the cross-checks attached to every report.
struct Tolerances {
  double subadditivity = 1e-10;          // D(t) >= -tol
  double rates_vs_micro = 1e-9;          // |e_micro(h) - sum_a rate_a|
  double h_vs_H = 1e-9;                  // |e_micro(h) - e_micro(H)|
  double entropy_invariance = 1e-9;      // |S(psi(t)) - S(psi(0))|
  double energy_conservation = 1e-10;    // times ||H||_max
  double positivity = 1e-9;              // averaged e_thermo >= -tol
  double relative_entropy_identity = 1e-8;
  double flux_nullity = 1e-9;            // times ||H||_max^2
  double derivative = 1e-5;              // finite-difference checks at dt = 1e-3
  double state_validity = 1e-10;
  double cesaro_identity = 1e-9;         // averaged energy bookkeeping vs Cesaro-state fluxes
};

/// A lattice, partition and interaction with everything derived from them
/// that every formula reuses.
struct Model {
  LatticeSpec lattice;
  Partition partition;  // validated
  Interaction interaction;
  HamiltonianSplit split;                       // H_a embedded, h
  std::vector<DenseOperator> local_hamiltonians;  // \hat H_a on the region space
  DenseOperator hamiltonian;                     // sum_a H_a + h
  std::vector<DenseOperator> fluxes;             // i[H, H_a]
  EvolutionCache cache;

  std::size_t num_regions() const { return partition.num_regions(); }
  std::size_t dimension() const { return lattice.dimension(); }
  double hamiltonian_norm() const { return hamiltonian.max_norm(); }
};

/// \hat H_a: the terms supported inside R_a, embedded in the region's own space.
inline DenseOperator local_region_hamiltonian(const Interaction& interaction, const LatticeSpec& lattice,
                                              const Partition& partition, std::size_t a) {
  const SiteSet& sites = partition.region(a);
  std::vector<int> dims;
  for (auto s : sites) dims.push_back(lattice.local_dim(s));
  const LatticeSpec region_lattice(dims);
  Interaction local;
  for (const auto& t : interaction.terms) {
    if (owning_region(t.support(), partition) != a) continue;
    SiteSet relabelled;
    for (auto s : t.support())
      relabelled.push_back(static_cast<std::size_t>(std::lower_bound(sites.begin(), sites.end(), s) - sites.begin()));
    local.add(std::move(relabelled), t.matrix());
  }
  return assemble_hamiltonian(local, region_lattice);
}

inline Model build_model(LatticeSpec lattice, const Partition& partition, Interaction interaction) {
  Model m;
  m.partition = validate_partition(lattice, partition);
  m.lattice = std::move(lattice);
  m.interaction = std::move(interaction);
  m.split = split_hamiltonian(m.interaction, m.lattice, m.partition);
  for (std::size_t a = 0; a < m.partition.num_regions(); ++a)
    m.local_hamiltonians.push_back(local_region_hamiltonian(m.interaction, m.lattice, m.partition, a));
  m.hamiltonian = m.split.total();
  for (std::size_t a = 0; a < m.partition.num_regions(); ++a)
    m.fluxes.push_back(i_commutator(m.hamiltonian, m.split.region_terms[a]));
  m.cache = EvolutionCache(m.hamiltonian);
  return m;
}

inline void require_betas(const std::vector<double>& betas, std::size_t regions) {
  if (betas.size() != regions)
    throw DimensionMismatch("got " + std::to_string(betas.size()) + " inverse temperatures for " +
                            std::to_string(regions) + " regions");
}

/// (x)_a gibbs(\hat H_a, beta_a)
inline DensityMatrix product_gibbs(const Model& model, const std::vector<double>& betas) {
  require_betas(betas, model.num_regions());
  std::vector<DensityMatrix> factors;
  for (std::size_t a = 0; a < model.num_regions(); ++a)
    factors.push_back(gibbs(model.local_hamiltonians[a], betas[a]));
  return product_state(factors, model.lattice, model.partition);
}

/// A real number extracted from a complex trace, with what was discarded.
struct RealValue {
  double value = 0;
  double imag_residue = 0;
};

struct RateValue : RealValue {
  std::size_t floored = 0;  // floored eigenvalues of psi_a; nonzero marks the rate UNRELIABLE
  bool unreliable() const { return floored > 0; }
};

/// Per-region marginals and their logarithms at one instant.
struct Marginals {
  std::vector<DensityMatrix> states;
  std::vector<double> entropies;
  std::vector<MatrixLog> logs;
};

inline Marginals marginals(const DensityMatrix& psi, const LatticeSpec& lattice, const Partition& partition,
                           double floor = kLogFloor) {
  Marginals out;
  for (std::size_t a = 0; a < partition.num_regions(); ++a) {
    auto rho = partial_trace(psi, lattice, partition, a);
    out.entropies.push_back(von_neumann_entropy(rho));
    out.logs.push_back(matrix_log(rho, floor));
    out.states.push_back(std::move(rho));
  }
  return out;
}

/// -i z  ->  (Im z, -Re z)
inline RealValue minus_i(Complex z) { return {z.imag(), -z.real()}; }

/// rate_a = -i Tr_a(log psi_a * Tr_{\a}[psi, generator]), which equals
/// -i Tr(psi [generator, 1 (x) log psi_a]).
inline RateValue subsystem_entropy_rate(const Matrix& psi_commutator, const MatrixLog& region_log,
                                        const LatticeSpec& lattice, const Partition& partition, std::size_t a) {
  const Matrix reduced = partial_trace_matrix(psi_commutator, lattice, partition.region(a));
  RateValue out;
  static_cast<RealValue&>(out) = minus_i(trace_product(region_log.log.matrix(), reduced));
  out.floored = region_log.floored;
  return out;
}

inline RateValue subsystem_entropy_rate(const DensityMatrix& psi, const DenseOperator& generator,
                                        const LatticeSpec& lattice, const Partition& partition, std::size_t a,
                                        double floor = kLogFloor) {
  const auto log = matrix_log(partial_trace(psi, lattice, partition, a), floor);
  return subsystem_entropy_rate(commutator(psi.as_operator(), generator).matrix(), log, lattice, partition, a);
}

/// log (x)_a psi_a assembled as sum_a 1 (x) log psi_a.
inline Matrix log_of_product(const std::vector<MatrixLog>& logs, const LatticeSpec& lattice,
                             const Partition& partition) {
  const auto d = static_cast<Eigen::Index>(lattice.dimension());
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t a = 0; a < logs.size(); ++a)
    detail::add_embedded(out, logs[a].log.matrix(), SubsystemIndexer(lattice, partition.region(a)));
  return out;
}

struct MicroValue : RealValue {
  std::vector<std::size_t> floored_regions;
};

/// e = -i Tr(psi [generator, log (x)_a psi_a]) = -i Tr(L [psi, generator]).
inline MicroValue ep_micro(const Matrix& psi_commutator, const Matrix& log_product,
                           const std::vector<MatrixLog>& logs) {
  MicroValue out;
  static_cast<RealValue&>(out) = minus_i(trace_product(log_product, psi_commutator));
  for (std::size_t a = 0; a < logs.size(); ++a)
    if (logs[a].was_floored()) out.floored_regions.push_back(a);
  return out;
}

/// `generator` is h or the full H; both give the same value.
inline MicroValue ep_micro(const DensityMatrix& psi, const DenseOperator& generator, const LatticeSpec& lattice,
                           const Partition& partition, double floor = kLogFloor) {
  const auto m = marginals(psi, lattice, partition, floor);
  return ep_micro(commutator(psi.as_operator(), generator).matrix(), log_of_product(m.logs, lattice, partition),
                  m.logs);
}

/// Tr(psi i[H, H_a]) for every region.
inline std::vector<double> region_fluxes(const DensityMatrix& psi, const std::vector<DenseOperator>& fluxes) {
  std::vector<double> out;
  for (const auto& f : fluxes) out.push_back(expectation(psi, f).real());
  return out;
}

/// sum_a beta_a Tr(psi i[H, H_a]); the small system (a = 0) only when asked.
inline double ep_thermo(const DensityMatrix& psi, const std::vector<DenseOperator>& fluxes,
                        const std::vector<double>& betas, bool include_small_system = false) {
  require_betas(betas, fluxes.size());
  double e = 0;
  for (std::size_t a = include_small_system ? 0 : 1; a < fluxes.size(); ++a)
    e += betas[a] * expectation(psi, fluxes[a]).real();
  return e;
}

inline double ep_thermo(const DensityMatrix& psi, const Interaction& interaction, const LatticeSpec& lattice,
                        const Partition& partition, const std::vector<double>& betas,
                        bool include_small_system = false) {
  const auto split = split_hamiltonian(interaction, lattice, partition);
  const auto h = split.total();
  std::vector<DenseOperator> fluxes;
  for (std::size_t a = 0; a < partition.num_regions(); ++a)
    fluxes.push_back(i_commutator(h, split.region_terms[a]));
  return ep_thermo(psi, fluxes, betas, include_small_system);
}

/// (1/T) sum_a beta_a [E_a(T) - E_a(0)] over all regions, a = 0 included.
/// This is the Cesaro average of the thermodynamic formula over [0, T].
inline double ep_thermo_averaged(const DensityMatrix& psi0, const Model& model, const std::vector<double>& betas,
                                 double horizon) {
  require_betas(betas, model.num_regions());
  if (!(horizon > 0)) throw Error("averaging horizon must be positive");
  const auto psi_t = evolve(psi0, model.cache, horizon);
  double acc = 0;
  for (std::size_t a = 0; a < model.num_regions(); ++a)
    acc += betas[a] * (region_energy(psi_t, model.split.region_terms[a]) -
                       region_energy(psi0, model.split.region_terms[a]));
  return acc / horizon;
}

struct CheckOutcome {
  std::string name;
  bool passed = false;
  double measured = 0;
  double tolerance = 0;
};

/// |measured| <= tol, or measured >= -tol for one-sided checks.
inline CheckOutcome check_abs(std::string name, double measured, double tol) {
  return {std::move(name), std::abs(measured) <= tol, measured, tol};
}
inline CheckOutcome check_lower(std::string name, double measured, double tol) {
  return {std::move(name), measured >= -tol, measured, tol};
}

struct EPReport {
  double t = 0;
  std::vector<double> region_entropies;
  double total_entropy = 0;
  double subadditivity_gap = 0;  // D(t) = sum_a S_a - S
  std::vector<RateValue> rates;
  MicroValue e_micro_h;
  MicroValue e_micro_H;
  double e_thermo = 0;
  std::vector<double> fluxes;
  double total_energy = 0;
  std::vector<CheckOutcome> checks;

  const std::vector<std::size_t>& floored_regions() const { return e_micro_h.floored_regions; }
  double rate_sum() const {
    double s = 0;
    for (const auto& r : rates) s += r.value;
    return s;
  }
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

struct ReportOptions {
  double log_floor = kLogFloor;
  bool include_small_system = false;  // in the instantaneous thermodynamic formula
  Tolerances tolerances;
  unsigned threads = thread_budget();
};

/// Every formula at one instant of a trajectory, with reference values
/// S(psi(0)) and Tr(psi(0) H) for the conservation checks.
inline EPReport evaluate_point(const DensityMatrix& psi, double t, const Model& model,
                               const std::vector<double>& betas, const ReportOptions& options,
                               double initial_entropy, double initial_energy) {
  EPReport r;
  r.t = t;
  const auto& lat = model.lattice;
  const auto& part = model.partition;
  const auto m = marginals(psi, lat, part, options.log_floor);
  r.region_entropies = m.entropies;
  r.total_entropy = von_neumann_entropy(psi);
  r.subadditivity_gap = -r.total_entropy;
  for (auto s : m.entropies) r.subadditivity_gap += s;

  const auto rho = psi.as_operator();
  const Matrix c_h = commutator(rho, model.split.coupling).matrix();
  const Matrix c_H = commutator(rho, model.hamiltonian).matrix();
  for (std::size_t a = 0; a < part.num_regions(); ++a)
    r.rates.push_back(subsystem_entropy_rate(c_h, m.logs[a], lat, part, a));
  const Matrix log_product = log_of_product(m.logs, lat, part);
  r.e_micro_h = ep_micro(c_h, log_product, m.logs);
  r.e_micro_H = ep_micro(c_H, log_product, m.logs);
  r.fluxes = region_fluxes(psi, model.fluxes);
  r.e_thermo = ep_thermo(psi, model.fluxes, betas, options.include_small_system);
  r.total_energy = expectation(psi, model.hamiltonian).real();

  const auto& tol = options.tolerances;
  r.checks.push_back(check_lower("subadditivity", r.subadditivity_gap, tol.subadditivity));
  r.checks.push_back(check_abs("rates_vs_micro", r.e_micro_h.value - r.rate_sum(), tol.rates_vs_micro));
  r.checks.push_back(check_abs("h_vs_H", r.e_micro_h.value - r.e_micro_H.value, tol.h_vs_H));
  r.checks.push_back(
      check_abs("entropy_invariance", r.total_entropy - initial_entropy, tol.entropy_invariance));
  r.checks.push_back(check_abs("energy_conservation", r.total_energy - initial_energy,
                               tol.energy_conservation * model.hamiltonian_norm()));
  return r;
}

/// One report per grid time, in grid order. Time points are evaluated in
/// parallel; a failing cross-check is recorded, never thrown.
inline std::vector<EPReport> full_report(const DensityMatrix& psi0, const Model& model,
                                         const std::vector<double>& betas, const std::vector<double>& time_grid,
                                         const ReportOptions& options = {}) {
  require_betas(betas, model.num_regions());
  if (time_grid.empty()) return {};
  const Trajectory trajectory(psi0, model.cache);
  const double s0 = von_neumann_entropy(psi0);
  const double e0 = expectation(psi0, model.hamiltonian).real();
  return parallel_map<EPReport>(
      time_grid.size(),
      [&](std::size_t i) {
        return evaluate_point(trajectory.at(time_grid[i]), time_grid[i], model, betas, options, s0, e0);
      },
      options.threads);
}

/// D(t) = sum_a S(psi_a(t)) - S(psi(t))
inline double subadditivity_gap(const DensityMatrix& psi, const LatticeSpec& lattice, const Partition& partition) {
  double d = -von_neumann_entropy(psi);
  for (std::size_t a = 0; a < partition.num_regions(); ++a)
    d += von_neumann_entropy(partial_trace(psi, lattice, partition, a));
  return d;
}

}  // namespace qspin
