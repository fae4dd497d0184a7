#pragma once

#include <vector>

#include "nch/geometry.hpp"
#include "nch/potentials.hpp"

namespace nch {

/// Structural constants of the state system; all must be positive.
struct PhysicalParams {
  double gamma = 1.0;
  double a = 1.0;
  double b = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double lambda = 1.0;

  void validate() const;
};

/// phi(0) = phi0, w(0) = w0, d/dt w(0) = w1.
struct InitialData {
  Field phi0;
  Field w0;
  Field w1;
};

struct NewtonConfig {
  double tol = 1e-10;  // infinity norm of the step residual
  int max_iter = 50;
  int max_halvings = 30;
};

/// Everything the forward problem needs except the control.
struct StateSystem {
  Grid grid;
  TimeGrid time;
  PhysicalParams params;
  PotentialSpec potential;
  InitialData init;
  SpaceTimeField source;  // f
  NewtonConfig newton;

  /// Conformance, positivity and (for singular potentials) compatibility.
  void validate() const;
};

struct StepDiagnostics {
  int iterations = 0;
  double residual = 0.0;
  int halvings = 0;
};

/// Solution (phi, mu, w, v = dw/dt) at every time level plus per-step Newton
/// statistics (steps[n] describes the step that produced level n+1).
struct StateTrajectory {
  SpaceTimeField phi;
  SpaceTimeField mu;
  SpaceTimeField w;
  SpaceTimeField v;
  std::vector<StepDiagnostics> steps;
};

/// Implicit Euler / convex-splitting scheme, per step n -> n+1:
///
///   (phi' - phi)/tau - Lap mu' + gamma phi' = f'
///   mu' = -Lap phi' + beta(phi') + pi(phi) + a - b v'
///   (v' - v)/tau - Lap(kappa1 v' + kappa2 w') + lambda (phi' - phi)/tau = u'
///   w' = w + tau v'
///
/// solved by damped Newton on (phi', mu', v'). Throws StepFailure when Newton
/// stalls and SeparationError when a singular potential ends up clipped.
StateTrajectory solve_state(const StateSystem& sys, const SpaceTimeField& control);

/// Temperature theta = dw/dt.
inline const SpaceTimeField& temperature(const StateTrajectory& traj) { return traj.v; }

/// Infinity norms of the discrete residuals of each step (index n: step n -> n+1).
struct ResidualReport {
  std::vector<double> phi_eq;
  std::vector<double> mu_eq;
  std::vector<double> w_eq;
  std::vector<double> w_update;
  double max() const;
};

/// Re-evaluates the scheme on a stored trajectory with the matrix-free Laplacian.
ResidualReport residual_report(const StateTrajectory& traj, const StateSystem& sys,
                               const SpaceTimeField& control);

/// mu0 = -Lap phi0 + F'(phi0) + a - b w1, a diagnostic for strong initial data.
Field initial_chemical_potential(const StateSystem& sys);

}  // namespace nch
