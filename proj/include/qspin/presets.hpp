#pragma once

// Nearest-neighbour interaction presets on open chains.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qspin/operators.hpp"

namespace qspin {

namespace pauli {
inline Matrix identity() { return Matrix::Identity(2, 2); }
inline Matrix x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline Matrix z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

/// Kronecker product a (x) b with a as the most significant factor.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace detail {
inline void require_qubits(const LatticeSpec& lattice, const char* preset) {
  for (auto d : lattice.local_dims())
    if (d != 2) throw Error(std::string("preset '") + preset + "' needs spin-1/2 sites (local_dim 2)");
}
}  // namespace detail

/// J sum_i (X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1})
inline Interaction xxz_chain(const LatticeSpec& lattice, double delta, double coupling = 1.0) {
  detail::require_qubits(lattice, "xxz");
  const Matrix bond = coupling * (kron(pauli::x(), pauli::x()) + kron(pauli::y(), pauli::y()) +
                                  delta * kron(pauli::z(), pauli::z()));
  Interaction out;
  for (std::size_t i = 0; i + 1 < lattice.num_sites(); ++i) out.add({i, i + 1}, bond);
  return out;
}

inline Interaction xx_chain(const LatticeSpec& lattice, double coupling = 1.0) {
  detail::require_qubits(lattice, "xx");
  const Matrix bond = coupling * (kron(pauli::x(), pauli::x()) + kron(pauli::y(), pauli::y()));
  Interaction out;
  for (std::size_t i = 0; i + 1 < lattice.num_sites(); ++i) out.add({i, i + 1}, bond);
  return out;
}

inline Interaction heisenberg_chain(const LatticeSpec& lattice, double coupling = 1.0) {
  return xxz_chain(lattice, 1.0, coupling);
}

/// -J sum_i Z_i Z_{i+1} - g sum_i X_i
inline Interaction tfim_chain(const LatticeSpec& lattice, double field, double coupling = 1.0) {
  detail::require_qubits(lattice, "tfim");
  Interaction out;
  const Matrix bond = -coupling * kron(pauli::z(), pauli::z());
  for (std::size_t i = 0; i + 1 < lattice.num_sites(); ++i) out.add({i, i + 1}, bond);
  for (std::size_t i = 0; i < lattice.num_sites(); ++i) out.add({i}, Matrix(-field * pauli::x()));
  return out;
}

/// Hermitian matrix with independent normal real/imaginary parts of width `scale`.
template <class Rng>
Matrix random_hermitian(Eigen::Index dim, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  return Matrix(0.5 * (g + g.adjoint()));
}

/// Random nearest-neighbour bonds plus random on-site fields; any local dims.
inline Interaction random_chain(const LatticeSpec& lattice, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  Interaction out;
  const auto n = lattice.num_sites();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto d = static_cast<Eigen::Index>(lattice.local_dim(i) * lattice.local_dim(i + 1));
    out.add({i, i + 1}, random_hermitian(d, scale, rng));
  }
  for (std::size_t i = 0; i < n; ++i)
    out.add({i}, random_hermitian(lattice.local_dim(i), scale, rng));
  return out;
}

}  // namespace qspin
