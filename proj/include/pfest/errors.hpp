#pragma once

#include <stdexcept>
#include <string>

namespace pfest {

// Parameter-range violations use std::domain_error and malformed inputs use
// std::invalid_argument. The types below mark conditions callers routinely
// branch on.

/// No finite sample size satisfies the requested guarantee.
class InfeasiblePlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The target puts mass where the base measure has none.
class SingularPairError : public InfeasiblePlanError {
 public:
  using InfeasiblePlanError::InfeasiblePlanError;
};

class UndefinedEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AllNullDrawsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pfest
