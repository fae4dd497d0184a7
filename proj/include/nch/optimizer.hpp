#pragma once

#include <array>
#include <vector>

#include "nch/errors.hpp"
#include "nch/sensitivity.hpp"
#include "nch/state_solver.hpp"

namespace nch {

/// Pointwise box u_min <= u <= u_max.
struct ControlBounds {
  SpaceTimeField lower;
  SpaceTimeField upper;

  static ControlBounds constant(const Grid& g, const TimeGrid& t, double lo, double hi);
  void validate(const Grid& g, const TimeGrid& t) const;
};

/// The optimal control problem: state system, cost, admissible box.
struct ControlProblem {
  StateSystem state;
  CostData cost;
  ControlBounds bounds;
  AdjointMode mode = AdjointMode::Transpose;

  void validate() const;
};

struct OptimizeConfig {
  int max_iters = 200;
  double armijo = 1e-4;        // sigma_A
  double backtrack = 0.5;      // rho_A
  double initial_step = 1.0;   // s0 before scaling by 1/||g0||
  double stationarity_tol = 1e-6;
  int max_backtracks = 40;

  void validate() const;
};

struct TraceEntry {
  int iteration = 0;
  double cost = 0.0;
  double stationarity = 0.0;
  double step = 0.0;
  double active_fraction = 0.0;
};

struct OptimizeResult {
  SpaceTimeField control;
  std::vector<TraceEntry> trace;
  int iterations = 0;
  bool converged = false;
  double probe_step = 0.0;  // s0 / ||g0||
};

/// Thrown when Armijo backtracking fails; carries the trace so far.
class StalledDescent : public LineSearchError {
 public:
  StalledDescent(const std::string& what, OptimizeResult partial)
      : LineSearchError(what), partial_(std::move(partial)) {}
  const OptimizeResult& partial() const noexcept { return partial_; }

 private:
  OptimizeResult partial_;
};

/// Individual terms of the cost: a1..a6 tracking terms and the nu term.
struct CostTerms {
  std::array<double, 7> terms{};
  double total() const;
};

CostTerms cost_terms(const StateTrajectory& traj, const SpaceTimeField& u, const CostData& cd,
                     const Grid& g, const TimeGrid& t);
double cost(const StateTrajectory& traj, const SpaceTimeField& u, const CostData& cd,
            const Grid& g, const TimeGrid& t);

/// Reduced cost J(S(u), u), solving the state system.
double reduced_cost(const ControlProblem& prob, const SpaceTimeField& u);

/// r + nu u, with r the adjoint's control sensitivity.
SpaceTimeField reduced_gradient(const SpaceTimeField& u, const AdjointTrajectory& adj, double nu);

/// State solve, adjoint solve and gradient in one go.
struct GradientEvaluation {
  StateTrajectory state;
  AdjointTrajectory adjoint;
  SpaceTimeField gradient;
  double cost = 0.0;
};
GradientEvaluation evaluate_gradient(const ControlProblem& prob, const SpaceTimeField& u);

/// Nodewise max(u_min, min(u_max, u)).
SpaceTimeField project(const SpaceTimeField& u, const ControlBounds& bounds);

/// ||u - P(u - s g)||_Q.
double stationarity_residual(const SpaceTimeField& u, const SpaceTimeField& g,
                             const ControlBounds& bounds, double s, const Grid& grid,
                             const TimeGrid& time);

/// Fraction of nodes (levels 1..nt) where u sits on a bound.
double active_fraction(const SpaceTimeField& u, const ControlBounds& bounds);

/// ||u - P(-r/nu)||_Q / max(1, ||u||_Q), the residual of the pointwise
/// optimality characterization; NaN when nu = 0.
double projection_residual(const ControlProblem& prob, const SpaceTimeField& u,
                           const AdjointTrajectory& adj);

/// Projected gradient with Armijo backtracking:
///   u+ = P(u - s g),  accept if J(u+) <= J(u) - (sigma_A / s) ||u+ - u||_Q^2.
/// Stops when ||u - P(u - s0 g)||_Q / max(1, ||u||_Q) <= tol at the fixed
/// probe step s0 = initial_step / ||g0||_Q.
OptimizeResult optimize(const ControlProblem& prob, const SpaceTimeField& u_init,
                        const OptimizeConfig& cfg);

}  // namespace nch
