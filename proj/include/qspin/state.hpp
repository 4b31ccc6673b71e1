#pragma once

// Density matrices, Gibbs and product states, partial traces, matrix
// logarithms, von Neumann and relative entropy. Entropies are in nats.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qspin/lattice.hpp"
#include "qspin/operators.hpp"

namespace qspin {

inline constexpr double kStateTolerance = 1e-12;
/// Eigenvalues below this contribute 0 to -sum lambda log lambda.
inline constexpr double kEntropyCutoff = 1e-14;
/// Default eigenvalue floor for matrix logarithms.
inline constexpr double kLogFloor = 1e-14;

struct SpectralDecomposition {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // columns

  Eigen::Index size() const { return eigenvalues.size(); }

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }

  /// V f(Lambda) V^dagger
  template <class F>
  Matrix apply(F&& f) const {
    Eigen::VectorXcd w(eigenvalues.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = f(eigenvalues(i));
    return eigenvectors * w.asDiagonal() * eigenvectors.adjoint();
  }
};

/// Eigendecomposition of a self-adjoint matrix (lower triangle is read).
inline SpectralDecomposition spectral_decomposition(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition did not converge");
  return solver.eigenvalues();
}

/// (A + A^dagger) / 2
inline Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// Tr(A B) without forming the product.
inline Complex trace_product(const Matrix& a, const Matrix& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

struct StateDefects {
  double hermiticity = 0;
  double trace = 0;       // |Tr - 1|
  double min_eigenvalue = 0;

  bool ok(double tol) const { return hermiticity <= tol && trace <= tol && min_eigenvalue >= -tol; }
};

inline StateDefects state_defects(const Matrix& m) {
  StateDefects d;
  d.hermiticity = hermiticity_defect(m);
  d.trace = std::abs(m.trace() - Complex(1.0));
  d.min_eigenvalue = m.size() == 0 ? 0.0 : hermitian_eigenvalues(hermitian_part(m)).minCoeff();
  return d;
}

/// Self-adjoint, positive semidefinite, unit trace.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  /// Validates all invariants at tolerance `tol`.
  explicit DensityMatrix(Matrix entries, double tol = kStateTolerance) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) throw DimensionMismatch("density matrix is not square");
    const auto d = state_defects(entries_);
    if (!d.ok(tol))
      throw InvariantViolation("not a density matrix: hermiticity defect " + std::to_string(d.hermiticity) +
                               ", trace defect " + std::to_string(d.trace) + ", min eigenvalue " +
                               std::to_string(d.min_eigenvalue));
  }

  /// For results that are states by construction (no eigen-check).
  static DensityMatrix trusted(Matrix entries) {
    DensityMatrix out;
    out.entries_ = std::move(entries);
    return out;
  }

  const Matrix& matrix() const { return entries_; }
  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  DenseOperator as_operator() const { return DenseOperator(entries_, true); }

 private:
  Matrix entries_;
};

inline DensityMatrix maximally_mixed(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return DensityMatrix::trusted(Matrix::Identity(d, d) / static_cast<double>(dim));
}

inline DensityMatrix gibbs(const SpectralDecomposition& spectrum, double beta) {
  const auto& e = spectrum.eigenvalues;
  // Shift the dominant Boltzmann exponent to zero before exponentiating.
  const double shift = beta >= 0 ? e.minCoeff() : e.maxCoeff();
  RealVector w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) w(i) = std::exp(-beta * (e(i) - shift));
  w /= w.sum();
  Matrix rho = spectrum.eigenvectors * w.cast<Complex>().asDiagonal() * spectrum.eigenvectors.adjoint();
  return DensityMatrix::trusted(hermitian_part(rho));
}

/// exp(-beta H) / Tr exp(-beta H)
inline DensityMatrix gibbs(const DenseOperator& h, double beta) {
  if (!std::isfinite(beta)) throw Error("gibbs needs a finite inverse temperature");
  return gibbs(spectral_decomposition(h.matrix()), beta);
}

/// Tr over the complement of `sites`; the kept factors follow the order of `sites`.
inline Matrix partial_trace_matrix(const Matrix& op, const LatticeSpec& lattice,
                                   std::span<const std::size_t> sites) {
  if (static_cast<std::size_t>(op.rows()) != lattice.dimension())
    throw DimensionMismatch("operator dimension does not match the lattice");
  SubsystemIndexer idx(lattice, sites);
  const auto inner = idx.inner_offsets();
  const auto outer = idx.outer_offsets();
  const auto d = static_cast<Eigen::Index>(inner.size());
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index s = 0; s < d; ++s) {
      Complex acc{};
      for (auto c : outer)
        acc += op(static_cast<Eigen::Index>(inner[static_cast<std::size_t>(r)] + c),
                  static_cast<Eigen::Index>(inner[static_cast<std::size_t>(s)] + c));
      out(r, s) = acc;
    }
  return out;
}

/// psi_a = Tr_{\a} psi
inline DensityMatrix partial_trace(const DensityMatrix& psi, const LatticeSpec& lattice,
                                   const Partition& partition, std::size_t a) {
  return DensityMatrix::trusted(partial_trace_matrix(psi.matrix(), lattice, partition.region(a)));
}

/// (x)_a sigma_a, assembled by index arithmetic for arbitrary (non-contiguous) regions.
inline DensityMatrix product_state(std::span<const DensityMatrix> states, const LatticeSpec& lattice,
                                   const Partition& partition) {
  const auto& dims = partition.region_dims();
  if (states.size() != dims.size())
    throw DimensionMismatch("product_state got " + std::to_string(states.size()) + " factors for " +
                            std::to_string(dims.size()) + " regions");
  for (std::size_t a = 0; a < dims.size(); ++a)
    if (states[a].dim() != dims[a])
      throw DimensionMismatch("factor " + std::to_string(a) + " has dimension " +
                              std::to_string(states[a].dim()) + ", region needs " + std::to_string(dims[a]));

  const std::size_t full = lattice.dimension();
  // local[a][i] = index of full basis state i inside region a
  std::vector<std::vector<Eigen::Index>> local(dims.size(), std::vector<Eigen::Index>(full));
  for (std::size_t a = 0; a < dims.size(); ++a) {
    SubsystemIndexer idx(lattice, partition.region(a));
    const auto inner = idx.inner_offsets();
    for (auto c : idx.outer_offsets())
      for (std::size_t r = 0; r < inner.size(); ++r) local[a][inner[r] + c] = static_cast<Eigen::Index>(r);
  }
  const auto d = static_cast<Eigen::Index>(full);
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      Complex v(1.0);
      for (std::size_t a = 0; a < dims.size() && v != Complex{}; ++a)
        v *= states[a].matrix()(local[a][static_cast<std::size_t>(i)], local[a][static_cast<std::size_t>(j)]);
      out(i, j) = v;
    }
  return DensityMatrix::trusted(std::move(out));
}

inline double entropy_of_spectrum(const RealVector& eigenvalues) {
  double s = 0;
  for (auto lambda : eigenvalues)
    if (lambda > kEntropyCutoff) s -= lambda * std::log(lambda);
  return s;
}

/// S = -Tr psi log psi with 0 log 0 = 0.
inline double von_neumann_entropy(const DensityMatrix& psi) {
  return entropy_of_spectrum(hermitian_eigenvalues(psi.matrix()));
}

struct MatrixLog {
  DenseOperator log;
  std::size_t floored = 0;  // eigenvalues replaced by the floor

  bool was_floored() const { return floored > 0; }
};

/// V diag(log max(lambda_i, floor)) V^dagger
inline MatrixLog matrix_log(const DensityMatrix& psi, double floor = kLogFloor) {
  if (!(floor > 0)) throw Error("matrix_log floor must be positive");
  const auto spectrum = spectral_decomposition(psi.matrix());
  std::size_t floored = 0;
  Matrix log = spectrum.apply([&](double lambda) {
    if (lambda < floor) {
      ++floored;
      return Complex(std::log(floor));
    }
    return Complex(std::log(lambda));
  });
  return {DenseOperator(hermitian_part(log), true), floored};
}

/// S(rho || sigma) = Tr rho (log rho - log sigma); +infinity when rho has
/// weight above `support_tol` outside the support of sigma.
inline double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma, double floor = kLogFloor,
                               double support_tol = 1e-12) {
  if (rho.dim() != sigma.dim()) throw DimensionMismatch("relative_entropy of states with different dims");
  const double neg_entropy = -entropy_of_spectrum(hermitian_eigenvalues(rho.matrix()));
  const auto sig = spectral_decomposition(sigma.matrix());
  // w_k = <v_k| rho |v_k>
  const Matrix rotated = sig.eigenvectors.adjoint() * rho.matrix() * sig.eigenvectors;
  double cross = 0;
  for (Eigen::Index k = 0; k < sig.size(); ++k) {
    const double w = rotated(k, k).real();
    const double lambda = sig.eigenvalues(k);
    if (lambda < floor) {
      if (w > support_tol) return std::numeric_limits<double>::infinity();
      continue;
    }
    cross += w * std::log(lambda);
  }
  return neg_entropy - cross;
}

}  // namespace qspin
