#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qspin/entropy_production.hpp"
#include "qspin/presets.hpp"

namespace qspin {
namespace {

const std::vector<double> kBetas{1.0, 0.5, 2.0};

Model six_qubit_model(const Interaction& in) {
  return build_model(LatticeSpec::uniform(6, 2), Partition({{2, 3}, {0, 1}, {4, 5}}), in);
}

double region_entropy(const DensityMatrix& psi, const Model& m, std::size_t a) {
  return von_neumann_entropy(partial_trace(psi, m.lattice, m.partition, a));
}

TEST(Rates, VanishWithoutCoupling) {
  const auto lat = LatticeSpec::uniform(4, 2);
  Interaction in;
  in.add({0, 1}, kron(pauli::x(), pauli::x())).add({2, 3}, kron(pauli::y(), pauli::z()));
  const auto model = build_model(lat, Partition({{0, 1}, {2, 3}}), in);
  EXPECT_EQ(model.split.coupling.max_norm(), 0.0);
  std::mt19937_64 rng(1);
  const DensityMatrix psi(oracle::random_density(16, rng));
  for (std::size_t a = 0; a < 2; ++a)
    EXPECT_NEAR(subsystem_entropy_rate(psi, model.split.coupling, model.lattice, model.partition, a).value, 0.0,
                1e-15);
  EXPECT_NEAR(ep_micro(psi, model.split.coupling, model.lattice, model.partition).value, 0.0, 1e-15);
}

TEST(Rates, MatchFiniteDifferenceOfRegionEntropy) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 3));
  const auto psi0 = product_gibbs(model, kBetas);
  const Trajectory traj(psi0, model.cache);
  const double dt = 1e-3;
  for (double t : {0.2, 1.5, 4.0}) {
    const auto psi = traj.at(t);
    for (std::size_t a = 0; a < 3; ++a) {
      const auto rate = subsystem_entropy_rate(psi, model.split.coupling, model.lattice, model.partition, a);
      ASSERT_FALSE(rate.unreliable());
      ASSERT_GT(hermitian_eigenvalues(partial_trace(psi, model.lattice, model.partition, a).matrix()).minCoeff(),
                1e-8);
      const double fd =
          (region_entropy(traj.at(t + dt), model, a) - region_entropy(traj.at(t - dt), model, a)) / (2 * dt);
      EXPECT_NEAR(rate.value, fd, 1e-5);
      EXPECT_LE(std::abs(rate.imag_residue), 1e-10);
    }
  }
}

TEST(Rates, GlobalGibbsStateIsStationary) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 4));
  const auto psi = gibbs(model.hamiltonian, 0.9);
  const Trajectory traj(psi, model.cache);
  for (std::size_t a = 0; a < 3; ++a) {
    const double rate =
        subsystem_entropy_rate(psi, model.split.coupling, model.lattice, model.partition, a).value;
    const double fd = (region_entropy(traj.at(1e-3), model, a) - region_entropy(traj.at(-1e-3), model, a)) / 2e-3;
    EXPECT_NEAR(rate, 0.0, 1e-9);
    EXPECT_NEAR(fd, 0.0, 1e-9);
  }
}

TEST(Micro, HAndFullHamiltonianAgreeOnRandomStates) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 5));
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityMatrix psi(oracle::random_density(64, rng));
    const auto via_h = ep_micro(psi, model.split.coupling, model.lattice, model.partition);
    const auto via_H = ep_micro(psi, model.hamiltonian, model.lattice, model.partition);
    EXPECT_NEAR(via_h.value, via_H.value, 1e-9);
    double sum = 0;
    for (std::size_t a = 0; a < 3; ++a)
      sum += subsystem_entropy_rate(psi, model.split.coupling, model.lattice, model.partition, a).value;
    EXPECT_NEAR(via_h.value, sum, 1e-9);
  }
}

TEST(Micro, EqualsDerivativeOfSubadditivityGap) {
  const auto model = six_qubit_model(xx_chain(LatticeSpec::uniform(6, 2)));
  const auto psi0 = product_gibbs(model, kBetas);
  const Trajectory traj(psi0, model.cache);
  const double dt = 1e-3;
  for (double t : {0.5, 2.0, 6.0}) {
    const double e = ep_micro(traj.at(t), model.split.coupling, model.lattice, model.partition).value;
    const double fd = (subadditivity_gap(traj.at(t + dt), model.lattice, model.partition) -
                       subadditivity_gap(traj.at(t - dt), model.lattice, model.partition)) /
                      (2 * dt);
    EXPECT_NEAR(e, fd, 1e-5);
  }
}

TEST(Micro, FlooredRegionsAreReported) {
  const auto lat = LatticeSpec::uniform(4, 2);
  const auto model = build_model(lat, Partition({{1, 2}, {0}, {3}}), tfim_chain(lat, 1.0));
  // Single-site reservoirs with a transverse field, frozen into pure states: their marginal logs must be floored.
  const auto psi0 = product_gibbs(model, {1.0, 1e6, 1e6});
  const auto e = ep_micro(psi0, model.split.coupling, lat, model.partition);
  EXPECT_EQ(e.floored_regions, (std::vector<std::size_t>{1, 2}));
  EXPECT_TRUE(
      subsystem_entropy_rate(psi0, model.split.coupling, lat, model.partition, 1).unreliable());
}

TEST(Thermo, DephasedAndGibbsStatesGiveZero) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 7));
  const auto rho = dephase(product_gibbs(model, kBetas), model.cache);
  EXPECT_NEAR(ep_thermo(rho, model.fluxes, kBetas), 0.0, 1e-9);
  EXPECT_NEAR(ep_thermo(rho, model.fluxes, kBetas, true), 0.0, 1e-9);
  for (double beta : {0.3, 2.0})
    EXPECT_NEAR(ep_thermo(gibbs(model.hamiltonian, beta), model.fluxes, kBetas), 0.0, 1e-9);
}

TEST(Thermo, SmallSystemFlagAndInteractionOverload) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 8));
  const auto psi = evolve(product_gibbs(model, kBetas), model.cache, 0.7);
  const auto f = region_fluxes(psi, model.fluxes);
  EXPECT_NEAR(ep_thermo(psi, model.fluxes, kBetas), kBetas[1] * f[1] + kBetas[2] * f[2], 1e-14);
  EXPECT_NEAR(ep_thermo(psi, model.fluxes, kBetas, true), kBetas[0] * f[0] + kBetas[1] * f[1] + kBetas[2] * f[2],
              1e-14);
  EXPECT_NEAR(ep_thermo(psi, model.interaction, model.lattice, model.partition, kBetas),
              ep_thermo(psi, model.fluxes, kBetas), 1e-13);
  EXPECT_THROW(ep_thermo(psi, model.fluxes, {1.0, 2.0}), DimensionMismatch);
}

// Independent route: U(T) from the Taylor series, H_a from permutation-built
// Kronecker embeddings of the bonds inside each region.
double energy_bookkeeping_oracle(const Matrix& h, const std::vector<Matrix>& region_h, const Matrix& psi0,
                                 const std::vector<double>& betas, double T) {
  const Matrix u = oracle::expm_series(Complex(0, -1) * T * h);
  const Matrix psi_t = u * psi0 * u.adjoint();
  double acc = 0;
  for (std::size_t a = 0; a < betas.size(); ++a)
    acc += betas[a] * ((psi_t * region_h[a]).trace().real() - (psi0 * region_h[a]).trace().real());
  return acc / T;
}

TEST(ThermoAveraged, SixQubitXXChainIsPositiveAndMatchesOracle) {
  const auto lat = LatticeSpec::uniform(6, 2);
  const auto model = six_qubit_model(xx_chain(lat));
  const auto psi0 = product_gibbs(model, kBetas);
  const double T = 20.0;
  const double got = ep_thermo_averaged(psi0, model, kBetas, T);
  EXPECT_GT(got, 0.0);

  const std::vector<int> dims(6, 2);
  const Matrix bond = oracle::kron(pauli::x(), pauli::x()) + oracle::kron(pauli::y(), pauli::y());
  auto e = [&](std::size_t i) { return oracle::embed_by_permutation(bond, {i, i + 1}, dims); };
  const Matrix h = e(0) + e(1) + e(2) + e(3) + e(4);
  const std::vector<Matrix> region_h{e(2), e(0), e(4)};
  EXPECT_NEAR(got, energy_bookkeeping_oracle(h, region_h, psi0.matrix(), kBetas, T), 1e-9);
}

TEST(ThermoAveraged, CommutingInitialStateGivesZero) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 9));
  const auto psi0 = gibbs(model.hamiltonian, 1.1);
  for (double T : {0.5, 10.0}) EXPECT_NEAR(ep_thermo_averaged(psi0, model, kBetas, T), 0.0, 1e-10);
}

TEST(ThermoAveraged, EqualBetasRelativeEntropyIdentity) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 10));
  const std::vector<double> betas(3, 0.8);
  const auto psi0 = product_gibbs(model, betas);
  for (double T : {1.0, 7.0}) {
    const double got = ep_thermo_averaged(psi0, model, betas, T);
    const auto psi_t = evolve(psi0, model.cache, T);
    EXPECT_NEAR(got, relative_entropy(psi_t, psi0) / T, 1e-8);
    // Total energy is conserved, so only the coupling energy reshuffles.
    const double dh = region_energy(psi_t, model.split.coupling) - region_energy(psi0, model.split.coupling);
    EXPECT_NEAR(got, -0.8 * dh / T, 1e-9);
  }
}

TEST(ThermoAveraged, EqualsAverageOfInstantaneousFormula) {
  // (1/T) int_0^T sum_a beta_a Tr(psi(t) F_a) dt = sum_a beta_a Tr(cesaro(T) F_a).
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 11));
  const auto psi0 = product_gibbs(model, kBetas);
  const double T = 4.0;
  const auto avg = cesaro_average(psi0, model.cache, T);
  EXPECT_NEAR(ep_thermo_averaged(psi0, model, kBetas, T), ep_thermo(avg, model.fluxes, kBetas, true), 1e-10);
}

TEST(ThermoAveraged, RejectsBadHorizon) {
  const auto model = six_qubit_model(xx_chain(LatticeSpec::uniform(6, 2)));
  EXPECT_THROW(ep_thermo_averaged(maximally_mixed(64), model, kBetas, 0.0), Error);
}

TEST(FullReport, EmptyGrid) {
  const auto model = six_qubit_model(xx_chain(LatticeSpec::uniform(6, 2)));
  EXPECT_TRUE(full_report(product_gibbs(model, kBetas), model, kBetas, {}).empty());
}

TEST(FullReport, ProductStateSaturatesSubadditivityAtTimeZero) {
  const auto model = six_qubit_model(xx_chain(LatticeSpec::uniform(6, 2)));
  const auto reports = full_report(product_gibbs(model, kBetas), model, kBetas, {0.0});
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_NEAR(reports[0].subadditivity_gap, 0.0, 1e-10);
  EXPECT_TRUE(reports[0].all_passed());
}

TEST(FullReport, OrderedDeterministicAndConsistent) {
  const auto model = six_qubit_model(random_chain(LatticeSpec::uniform(6, 2), 12));
  const auto psi0 = product_gibbs(model, kBetas);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  ReportOptions serial;
  serial.threads = 1;
  ReportOptions threaded;
  threaded.threads = 3;
  const auto a = full_report(psi0, model, kBetas, grid, serial);
  const auto b = full_report(psi0, model, kBetas, grid, threaded);
  ASSERT_EQ(a.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a[i].t, grid[i]);
    EXPECT_EQ(a[i].e_micro_h.value, b[i].e_micro_h.value);
    EXPECT_EQ(a[i].subadditivity_gap, b[i].subadditivity_gap);
    EXPECT_EQ(a[i].fluxes, b[i].fluxes);
    EXPECT_TRUE(a[i].all_passed()) << "t = " << grid[i];
    EXPECT_NEAR(a[i].e_micro_h.value, a[i].rate_sum(), 1e-9);
    EXPECT_NEAR(a[i].e_micro_h.value, a[i].e_micro_H.value, 1e-9);
  }
}

TEST(FullReport, CorruptedToleranceIsReportedNotThrown) {
  const auto model = six_qubit_model(xx_chain(LatticeSpec::uniform(6, 2)));
  ReportOptions opts;
  opts.tolerances.subadditivity = -1.0;  // demands D >= 1
  const auto reports = full_report(product_gibbs(model, kBetas), model, kBetas, {0.0, 1.0}, opts);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_FALSE(reports[0].all_passed());
}

}  // namespace
}  // namespace qspin
