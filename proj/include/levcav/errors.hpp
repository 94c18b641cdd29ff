#pragma once

#include <stdexcept>
#include <string>

namespace levcav {

/// Invalid physical input (non-positive radius, ε ≤ 1, position outside the cavity...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Parameters that produce an anti-restoring or otherwise unstable trap.
class InstabilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Failure of a numerical procedure: non-convergence, no root, ill-conditioned fit.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace levcav
