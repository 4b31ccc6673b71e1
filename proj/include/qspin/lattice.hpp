#pragma once

// Finite site sets, local Hilbert dimensions and their decomposition into a
// small system (region 0) and reservoirs (regions 1..m).
//
// Tensor convention: the full space is the product over sites in increasing
// index, site 0 being the most significant (leftmost) factor.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qspin/errors.hpp"

namespace qspin {

/// Largest full-space dimension accepted by the dense engine.
inline constexpr std::size_t kMaxDimension = std::size_t{1} << 24;

using SiteSet = std::vector<std::size_t>;

class LatticeSpec {
 public:
  LatticeSpec() = default;

  explicit LatticeSpec(std::vector<int> local_dims) : dims_(std::move(local_dims)) {
    if (dims_.empty()) throw PartitionError("lattice needs at least one site");
    strides_.assign(dims_.size(), 1);
    std::size_t total = 1;
    for (std::size_t k = dims_.size(); k-- > 0;) {
      if (dims_[k] < 2)
        throw PartitionError("site " + std::to_string(k) + " has local dimension " +
                             std::to_string(dims_[k]) + " (must be >= 2)");
      strides_[k] = total;
      const auto d = static_cast<std::size_t>(dims_[k]);
      if (total > kMaxDimension / d)
        throw CapacityError("full Hilbert space dimension exceeds the dense limit of " +
                            std::to_string(kMaxDimension));
      total *= d;
    }
    dim_ = total;
  }

  static LatticeSpec uniform(std::size_t num_sites, int local_dim) {
    return LatticeSpec(std::vector<int>(num_sites, local_dim));
  }

  std::size_t num_sites() const { return dims_.size(); }
  int local_dim(std::size_t site) const { return dims_.at(site); }
  const std::vector<int>& local_dims() const { return dims_; }
  /// Distance between consecutive values of `site`'s digit in a full-space index.
  std::size_t stride(std::size_t site) const { return strides_.at(site); }
  std::size_t dimension() const { return dim_; }

  /// Product of local dimensions over `sites`.
  std::size_t dimension_of(std::span<const std::size_t> sites) const {
    std::size_t d = 1;
    for (auto s : sites) d *= static_cast<std::size_t>(local_dim(s));
    return d;
  }

  bool contains(std::size_t site) const { return site < dims_.size(); }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 0;
};

class Partition;
Partition validate_partition(const LatticeSpec& lattice, const Partition& partition);

/// Regions R_0..R_m; R_0 is the small system. Only a validated partition
/// carries region dimensions.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<SiteSet> regions) : regions_(std::move(regions)) {}

  const std::vector<SiteSet>& regions() const { return regions_; }
  const SiteSet& region(std::size_t a) const { return regions_.at(a); }
  std::size_t num_regions() const { return regions_.size(); }
  static constexpr std::size_t small_system_index() { return 0; }

  bool validated() const { return validated_; }

  const std::vector<std::size_t>& region_dims() const {
    if (!validated_) throw PartitionError("partition has not been validated");
    return dims_;
  }

  /// Index of the region containing `site`, or num_regions() if none.
  std::size_t region_of(std::size_t site) const {
    for (std::size_t a = 0; a < regions_.size(); ++a)
      if (std::binary_search(regions_[a].begin(), regions_[a].end(), site)) return a;
    return regions_.size();
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  friend Partition validate_partition(const LatticeSpec&, const Partition&);

  std::vector<SiteSet> regions_;
  std::vector<std::size_t> dims_;
  bool validated_ = false;
};

/// Checks that the regions form a disjoint cover of the lattice with at least
/// one reservoir; sorts each region and records d_a = prod of local dims.
inline Partition validate_partition(const LatticeSpec& lattice, const Partition& partition) {
  if (partition.num_regions() < 2)
    throw PartitionError("partition needs a small system and at least one reservoir");

  std::vector<int> owner(lattice.num_sites(), -1);
  Partition out;
  out.regions_.reserve(partition.num_regions());
  for (std::size_t a = 0; a < partition.num_regions(); ++a) {
    SiteSet sites = partition.region(a);
    if (sites.empty()) throw EmptyRegionError("region " + std::to_string(a) + " is empty");
    std::sort(sites.begin(), sites.end());
    for (auto s : sites) {
      if (!lattice.contains(s))
        throw PartitionError("region " + std::to_string(a) + " names site " + std::to_string(s) +
                             " outside the lattice");
      if (owner[s] >= 0)
        throw OverlapError("site " + std::to_string(s) + " belongs to regions " +
                           std::to_string(owner[s]) + " and " + std::to_string(a));
      owner[s] = static_cast<int>(a);
    }
    out.dims_.push_back(lattice.dimension_of(sites));
    out.regions_.push_back(std::move(sites));
  }
  for (std::size_t s = 0; s < owner.size(); ++s)
    if (owner[s] < 0) throw CoverageError("site " + std::to_string(s) + " belongs to no region");

  out.validated_ = true;
  return out;
}

inline std::vector<std::size_t> region_dimensions(const Partition& partition) {
  return partition.region_dims();
}

/// Splits full-space basis indices into an "inner" part on a list of sites
/// and an "outer" part on the complement, so that every full index is
/// inner_offsets()[r] + outer_offsets()[c] for a unique pair (r, c).
///
/// The inner local index r follows the order in which the sites are listed
/// (first listed = most significant); the complement is in increasing order.
class SubsystemIndexer {
 public:
  SubsystemIndexer(const LatticeSpec& lattice, std::span<const std::size_t> sites) {
    std::vector<bool> inside(lattice.num_sites(), false);
    for (auto s : sites) {
      if (!lattice.contains(s))
        throw PartitionError("site " + std::to_string(s) + " is outside the lattice");
      if (inside[s]) throw PartitionError("site " + std::to_string(s) + " listed twice");
      inside[s] = true;
    }
    inner_ = offsets(lattice, sites);
    SiteSet rest;
    for (std::size_t s = 0; s < lattice.num_sites(); ++s)
      if (!inside[s]) rest.push_back(s);
    outer_ = offsets(lattice, rest);
  }

  std::size_t inner_dim() const { return inner_.size(); }
  std::size_t outer_dim() const { return outer_.size(); }
  std::span<const std::size_t> inner_offsets() const { return inner_; }
  std::span<const std::size_t> outer_offsets() const { return outer_; }

 private:
  static std::vector<std::size_t> offsets(const LatticeSpec& lattice,
                                          std::span<const std::size_t> sites) {
    std::vector<std::size_t> out{0};
    for (auto s : sites) {
      const auto d = static_cast<std::size_t>(lattice.local_dim(s));
      const auto stride = lattice.stride(s);
      std::vector<std::size_t> next;
      next.reserve(out.size() * d);
      for (auto base : out)
        for (std::size_t digit = 0; digit < d; ++digit) next.push_back(base + digit * stride);
      out = std::move(next);
    }
    return out;
  }

  std::vector<std::size_t> inner_;
  std::vector<std::size_t> outer_;
};

}  // namespace qspin
