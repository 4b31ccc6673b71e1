#pragma once

#include <stdexcept>
#include <string>

namespace qspin {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed lattice or partition (overlap, coverage, empty region, bad dims).
class PartitionError : public Error {
 public:
  using Error::Error;
};

class OverlapError : public PartitionError {
 public:
  using PartitionError::PartitionError;
};

class CoverageError : public PartitionError {
 public:
  using PartitionError::PartitionError;
};

class EmptyRegionError : public PartitionError {
 public:
  using PartitionError::PartitionError;
};

/// Hilbert space too large for the dense engine.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A matrix failed a Hermiticity / positivity / trace invariant.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace qspin
