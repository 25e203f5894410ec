#pragma once

#include <stdexcept>
#include <string>

namespace eelink {

// Base class of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a documented invariant (dataset, weights, config, ...).
struct ValidationError : Error {
  using Error::Error;
};

// A config or data file could not be parsed.
struct ParseError : Error {
  using Error::Error;
};

// Base of the failures a bootstrap draw may recover from by redrawing
// weights.
struct SolverFailure : Error {
  using Error::Error;
};

// An iterative solver hit its iteration cap, produced a non-finite step,
// or ran into quasi-separation.
struct SolverDiverged : SolverFailure {
  using SolverFailure::SolverFailure;
};

// A Jacobian or information matrix failed inversion at the relative
// condition threshold.
struct SingularJacobian : SolverFailure {
  using SolverFailure::SolverFailure;
};

// The estimating equation has no usable root under the given weighting
// (vanishing denominator, collinear regressors, no treated mass).
struct NotIdentified : SolverFailure {
  using SolverFailure::SolverFailure;
};

// Fitted propensities leave the allowed (eps, 1-eps) band.
struct OverlapViolation : SolverFailure {
  using SolverFailure::SolverFailure;
};

// A bootstrap draw failed on the initial weights and on every retry.
struct DrawFailed : Error {
  using Error::Error;
};

// Study-level failure (too many replicates failed).
struct StudyError : Error {
  using Error::Error;
};

}  // namespace eelink
