#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace nch {

inline std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field or space-time field does not match the grid it is used with.
class ConformanceError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its domain (e.g. nonzero-mean input to the
/// inverse Neumann operator).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Potential evaluated outside the open interval (r-, r+).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + format_residual(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Newton failed on a time step of the state system.
class StepFailure : public SolverError {
 public:
  StepFailure(int step, double residual)
      : SolverError("Newton failed at step " + std::to_string(step), residual),
        step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// The converged state touched the clipping band of a singular potential.
class SeparationError : public Error {
 public:
  SeparationError(int step, int clipped_nodes)
      : Error("separation violated at step " + std::to_string(step) + ": " +
              std::to_string(clipped_nodes) + " node(s) clipped"),
        step_(step),
        clipped_(clipped_nodes) {}
  int step() const noexcept { return step_; }
  int clipped_nodes() const noexcept { return clipped_; }

 private:
  int step_;
  int clipped_;
};

/// Linearized or adjoint solve failed.
class SensitivityError : public Error {
 public:
  using Error::Error;
};

/// Armijo backtracking exhausted its halvings.
class LineSearchError : public Error {
 public:
  using Error::Error;
};

/// One violated constraint of a run configuration.
struct ConfigViolation {
  std::string field;
  std::string value;
  std::string constraint;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigViolation> violations);
  const std::vector<ConfigViolation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<ConfigViolation> violations_;
};

}  // namespace nch
