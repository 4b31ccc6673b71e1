#pragma once

// Unitary evolution psi(t) = e^{-iHt} psi e^{iHt} in the energy eigenbasis,
// exact Cesaro time averages and the infinite-time dephasing limit.

#include <cmath>
#include <vector>

#include "qspin/operators.hpp"
#include "qspin/state.hpp"

namespace qspin {

/// Spectral decomposition of H shared by every time point of a scenario.
class EvolutionCache {
 public:
  EvolutionCache() = default;

  explicit EvolutionCache(const DenseOperator& h)
      : spectrum_(spectral_decomposition(h.matrix())), h_norm_(h.max_norm()) {
    degeneracy_tol_ = 1e-10 * std::max(1.0, h_norm_);
    reconstruction_error_ = max_norm(h.matrix() - spectrum_.reconstruct());
    if (reconstruction_error_ > 1e-10 * std::max(1.0, h_norm_))
      throw InvariantViolation("eigendecomposition of H reconstructs with error " +
                               std::to_string(reconstruction_error_));

    // Degenerate blocks: consecutive sorted energies closer than the tolerance.
    const auto& e = spectrum_.eigenvalues;
    block_.assign(static_cast<std::size_t>(e.size()), 0);
    for (Eigen::Index j = 1; j < e.size(); ++j)
      block_[static_cast<std::size_t>(j)] =
          block_[static_cast<std::size_t>(j - 1)] + (e(j) - e(j - 1) > degeneracy_tol_ ? 1 : 0);
  }

  const SpectralDecomposition& spectrum() const { return spectrum_; }
  const RealVector& energies() const { return spectrum_.eigenvalues; }
  const Matrix& eigenvectors() const { return spectrum_.eigenvectors; }
  std::size_t dim() const { return static_cast<std::size_t>(spectrum_.size()); }
  double degeneracy_tolerance() const { return degeneracy_tol_; }
  double hamiltonian_norm() const { return h_norm_; }
  double reconstruction_error() const { return reconstruction_error_; }
  /// Degenerate-block label of eigenvalue j (non-decreasing in j).
  int block(Eigen::Index j) const { return block_[static_cast<std::size_t>(j)]; }

 private:
  SpectralDecomposition spectrum_;
  double h_norm_ = 0;
  double degeneracy_tol_ = 0;
  double reconstruction_error_ = 0;
  std::vector<int> block_;
};

/// phi(x) = (e^{-ix} - 1)/(-ix) = e^{-ix/2} sin(x/2)/(x/2), phi(0) = 1.
inline Complex cesaro_kernel(double x) {
  if (x == 0.0) return Complex(1.0);
  const double half = 0.5 * x;
  return std::polar(std::sin(half) / half, -half);
}

/// An initial state expressed once in the energy eigenbasis, then evolved,
/// averaged or dephased without re-rotating it.
class Trajectory {
 public:
  Trajectory(const DensityMatrix& psi0, const EvolutionCache& cache) : cache_(&cache) {
    if (psi0.dim() != cache.dim())
      throw DimensionMismatch("state dimension " + std::to_string(psi0.dim()) +
                              " does not match Hamiltonian dimension " + std::to_string(cache.dim()));
    initial_ = psi0.matrix();
    energy_basis_ = cache.eigenvectors().adjoint() * psi0.matrix() * cache.eigenvectors();
  }

  /// psi(t); entry (j,k) in the eigenbasis picks up exp(-i(E_j - E_k)t).
  DensityMatrix at(double t) const {
    if (t == 0.0) return DensityMatrix::trusted(initial_);
    const auto& e = cache_->energies();
    return from_energy_basis([&](Eigen::Index j, Eigen::Index k) {
      return std::polar(1.0, -(e(j) - e(k)) * t);
    });
  }

  /// (1/T) int_0^T psi(t) dt, exactly.
  DensityMatrix cesaro(double horizon) const {
    if (!(horizon > 0)) throw Error("Cesaro horizon must be positive");
    const auto& e = cache_->energies();
    return from_energy_basis(
        [&](Eigen::Index j, Eigen::Index k) { return cesaro_kernel((e(j) - e(k)) * horizon); });
  }

  /// Coherences between distinct energy levels removed; degenerate blocks kept.
  DensityMatrix dephased() const {
    return from_energy_basis([&](Eigen::Index j, Eigen::Index k) {
      return Complex(cache_->block(j) == cache_->block(k) ? 1.0 : 0.0);
    });
  }

 private:
  template <class Weight>
  DensityMatrix from_energy_basis(Weight&& weight) const {
    Matrix m = energy_basis_;
    const auto d = m.rows();
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index j = 0; j < d; ++j) m(j, k) *= weight(j, k);
    Matrix back = cache_->eigenvectors() * m * cache_->eigenvectors().adjoint();
    return DensityMatrix::trusted(hermitian_part(back));
  }

  const EvolutionCache* cache_;
  Matrix initial_;
  Matrix energy_basis_;
};

inline DensityMatrix evolve(const DensityMatrix& psi0, const EvolutionCache& cache, double t) {
  return Trajectory(psi0, cache).at(t);
}

inline DensityMatrix cesaro_average(const DensityMatrix& psi0, const EvolutionCache& cache, double horizon) {
  return Trajectory(psi0, cache).cesaro(horizon);
}

inline DensityMatrix dephase(const DensityMatrix& psi0, const EvolutionCache& cache) {
  return Trajectory(psi0, cache).dephased();
}

/// Tr(psi A), keeping the imaginary residue for diagnostics.
inline Complex expectation(const DensityMatrix& psi, const DenseOperator& a) {
  if (psi.dim() != a.dim()) throw DimensionMismatch("expectation: state and operator dimensions differ");
  return trace_product(psi.matrix(), a.matrix());
}

/// E_a = Tr(psi H_a)
inline double region_energy(const DensityMatrix& psi, const DenseOperator& region_hamiltonian) {
  return expectation(psi, region_hamiltonian).real();
}

}  // namespace qspin
