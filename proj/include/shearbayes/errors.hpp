#pragma once

#include <stdexcept>

namespace shearbayes {

// CLI exit codes: 0 success, 2 usage/config, 3 I/O, 4 numerical failure.

/// Invalid configuration (bad steps, inconsistent domain, missing fields).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension or grid mismatch between two objects that must agree.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input value outside the operation's mathematical domain.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Instability, divergence or factorization failure at run time.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace shearbayes
