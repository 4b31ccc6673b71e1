#pragma once

// Full-space operators built from finite-support local terms: embedding,
// Hamiltonian assembly and splitting, commutators and heat-flux operators.

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qspin/errors.hpp"
#include "qspin/lattice.hpp"

namespace qspin {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-12;

/// max_ij |A_ij|
inline double max_norm(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// max_ij |A_ij - conj(A_ji)|
inline double hermiticity_defect(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return a.size() == 0 ? 0.0 : (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// Square complex matrix on the full space, optionally certified self-adjoint.
class DenseOperator {
 public:
  DenseOperator() = default;

  explicit DenseOperator(Matrix entries, bool hermitian = false)
      : entries_(std::move(entries)), hermitian_(hermitian) {
    if (entries_.rows() != entries_.cols()) throw DimensionMismatch("operator matrix is not square");
    if (hermitian_ && hermiticity_defect(entries_) > kHermitianTolerance)
      throw InvariantViolation("operator flagged self-adjoint has defect " +
                               std::to_string(hermiticity_defect(entries_)));
  }

  static DenseOperator zero(std::size_t dim) {
    return DenseOperator(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
                         true);
  }
  static DenseOperator identity(std::size_t dim) {
    return DenseOperator(
        Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)), true);
  }

  const Matrix& matrix() const { return entries_; }
  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  bool hermitian() const { return hermitian_; }
  double max_norm() const { return qspin::max_norm(entries_); }

 private:
  Matrix entries_;
  bool hermitian_ = false;
};

/// Phi(X): a self-adjoint matrix acting on the sites in `support`, whose
/// tensor factors follow the order of `support` (first = most significant).
class LocalTerm {
 public:
  LocalTerm(SiteSet support, Matrix matrix) : support_(std::move(support)), matrix_(std::move(matrix)) {
    if (support_.empty()) throw DimensionMismatch("local term has empty support");
    if (matrix_.rows() != matrix_.cols()) throw DimensionMismatch("local term matrix is not square");
    if (hermiticity_defect(matrix_) > kHermitianTolerance)
      throw InvariantViolation("local term is not self-adjoint (defect " +
                               std::to_string(hermiticity_defect(matrix_)) + ")");
  }

  const SiteSet& support() const { return support_; }
  const Matrix& matrix() const { return matrix_; }

 private:
  SiteSet support_;
  Matrix matrix_;
};

/// Finite list of local terms; duplicate supports add.
struct Interaction {
  std::vector<LocalTerm> terms;

  Interaction& add(SiteSet support, Matrix matrix) {
    terms.emplace_back(std::move(support), std::move(matrix));
    return *this;
  }
};

namespace detail {

inline SubsystemIndexer checked_indexer(const LatticeSpec& lattice, const SiteSet& support,
                                        Eigen::Index local_rows) {
  SubsystemIndexer idx(lattice, support);
  if (static_cast<Eigen::Index>(idx.inner_dim()) != local_rows)
    throw DimensionMismatch("local matrix has dimension " + std::to_string(local_rows) +
                            " but its support has dimension " + std::to_string(idx.inner_dim()));
  return idx;
}

/// target += 1_{rest} (x) local, with `local` acting on `support`.
inline void add_embedded(Matrix& target, const Matrix& local, const SubsystemIndexer& idx) {
  const auto inner = idx.inner_offsets();
  const auto outer = idx.outer_offsets();
  for (auto c : outer)
    for (std::size_t r = 0; r < inner.size(); ++r)
      for (std::size_t s = 0; s < inner.size(); ++s) {
        const Complex v = local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
        if (v != Complex{}) target(static_cast<Eigen::Index>(inner[r] + c),
                                   static_cast<Eigen::Index>(inner[s] + c)) += v;
      }
}

}  // namespace detail

/// 1_{\X} (x) M for an arbitrary matrix M on the listed sites.
inline Matrix embed_matrix(const Matrix& local, const SiteSet& sites, const LatticeSpec& lattice) {
  const auto idx = detail::checked_indexer(lattice, sites, local.rows());
  const auto d = static_cast<Eigen::Index>(lattice.dimension());
  Matrix out = Matrix::Zero(d, d);
  detail::add_embedded(out, local, idx);
  return out;
}

inline DenseOperator embed(const LocalTerm& term, const LatticeSpec& lattice) {
  return DenseOperator(embed_matrix(term.matrix(), term.support(), lattice), true);
}

/// H = sum over terms of embed(Phi(X)), accumulated in term order.
inline DenseOperator assemble_hamiltonian(const Interaction& interaction, const LatticeSpec& lattice) {
  const auto d = static_cast<Eigen::Index>(lattice.dimension());
  Matrix h = Matrix::Zero(d, d);
  for (const auto& t : interaction.terms)
    detail::add_embedded(h, t.matrix(), detail::checked_indexer(lattice, t.support(), t.matrix().rows()));
  return DenseOperator(std::move(h), true);
}

enum class SplitMode {
  /// H_a collects terms supported inside R_a; h collects every straddling term.
  canonical,
  /// All H_a = 0 and h = H.
  h_equals_H,
};

/// H = sum_a H_a + h.
struct HamiltonianSplit {
  std::vector<DenseOperator> region_terms;  // H_a, a = 0..m
  DenseOperator coupling;                   // h

  /// (((H_0 + H_1) + ...) + H_m) + h, the summation order used for H everywhere.
  DenseOperator total() const {
    Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(coupling.dim()),
                              static_cast<Eigen::Index>(coupling.dim()));
    for (const auto& ha : region_terms) sum += ha.matrix();
    sum += coupling.matrix();
    return DenseOperator(std::move(sum), true);
  }
};

/// Region whose sites contain the whole support, or num_regions() if the
/// support straddles two or more regions.
inline std::size_t owning_region(const SiteSet& support, const Partition& partition) {
  const std::size_t a = partition.region_of(support.front());
  for (auto s : support)
    if (partition.region_of(s) != a) return partition.num_regions();
  return a;
}

inline HamiltonianSplit split_hamiltonian(const Interaction& interaction, const LatticeSpec& lattice,
                                          const Partition& partition,
                                          SplitMode mode = SplitMode::canonical) {
  if (!partition.validated()) throw PartitionError("split_hamiltonian needs a validated partition");
  const auto d = static_cast<Eigen::Index>(lattice.dimension());
  const std::size_t m = partition.num_regions();
  std::vector<Matrix> parts(m + 1, Matrix::Zero(d, d));
  for (const auto& t : interaction.terms) {
    const auto idx = detail::checked_indexer(lattice, t.support(), t.matrix().rows());
    const std::size_t slot = mode == SplitMode::h_equals_H ? m : owning_region(t.support(), partition);
    detail::add_embedded(parts[slot], t.matrix(), idx);
  }
  HamiltonianSplit out;
  for (std::size_t a = 0; a < m; ++a) out.region_terms.emplace_back(std::move(parts[a]), true);
  out.coupling = DenseOperator(std::move(parts[m]), true);
  return out;
}

/// H assembled through the canonical split; bit-identical to
/// split_hamiltonian(...).total().
inline DenseOperator assemble_hamiltonian(const Interaction& interaction, const LatticeSpec& lattice,
                                          const Partition& partition) {
  return split_hamiltonian(interaction, lattice, partition).total();
}

inline DenseOperator commutator(const DenseOperator& a, const DenseOperator& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("commutator of operators with dimensions " + std::to_string(a.dim()) +
                            " and " + std::to_string(b.dim()));
  if (a.hermitian() && b.hermitian()) {
    // [A, B] = AB - (AB)^dagger: exactly anti-Hermitian and one product.
    Matrix ab = a.matrix() * b.matrix();
    Matrix c = ab - ab.adjoint();
    return DenseOperator(std::move(c));
  }
  return DenseOperator(Matrix(a.matrix() * b.matrix() - b.matrix() * a.matrix()));
}

/// i[A, B] for self-adjoint A, B; the result is self-adjoint.
inline DenseOperator i_commutator(const DenseOperator& a, const DenseOperator& b) {
  if (!a.hermitian() || !b.hermitian())
    throw InvariantViolation("i_commutator needs self-adjoint arguments");
  Matrix c = Complex(0.0, 1.0) * commutator(a, b).matrix();
  return DenseOperator(std::move(c), true);
}

/// Energy-flux operator into region a: i[H, H_a].
inline DenseOperator flux_operator(const HamiltonianSplit& split, std::size_t a) {
  return i_commutator(split.total(), split.region_terms.at(a));
}

/// The same flux via the coupling only: i[h, H_a] (terms on disjoint
/// supports commute, so the two agree).
inline DenseOperator flux_operator_via_coupling(const HamiltonianSplit& split, std::size_t a) {
  return i_commutator(split.coupling, split.region_terms.at(a));
}

inline DenseOperator flux_operator(const Interaction& interaction, const LatticeSpec& lattice,
                                   const Partition& partition, std::size_t a) {
  return flux_operator(split_hamiltonian(interaction, lattice, partition), a);
}

}  // namespace qspin
