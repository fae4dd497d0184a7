#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nch/optimizer.hpp"

namespace nch {

/// Measurements at one level of a check (one epsilon, one refinement, ...).
struct CheckLevel {
  std::string label;
  std::vector<std::pair<std::string, double>> values;
};

/// Outcome of one verification check.
struct CheckReport {
  std::string name;
  std::string setup;        // grid, time grid, potential
  std::string mode;         // adjoint mode, or empty
  std::string expectation;  // human-readable pass criterion
  double measured = 0.0;    // the headline number compared against the criterion
  std::vector<CheckLevel> levels;
  bool pass = false;
};

std::string describe(const StateSystem& sys);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Central differences of the reduced cost against <r + nu u, h>_Q; headline
/// is the smallest relative error over the sweep.
CheckReport fd_gradient_check(const ControlProblem& prob, const SpaceTimeField& u,
                              const SpaceTimeField& h, const std::vector<double>& eps_list,
                              double tol = 1e-6);

/// Remainder ||S(u + eps h) - S(u) - eps S'(u)h||_Z and its fitted order.
/// Passes when every remainder is below `exact_tol` (linear state system) or
/// the slope lies in [slope_lo, slope_hi].
CheckReport linearization_order_check(const ControlProblem& prob, const SpaceTimeField& u,
                                      const SpaceTimeField& h,
                                      const std::vector<double>& eps_list,
                                      double slope_lo = 1.8, double slope_hi = 2.2,
                                      double exact_tol = 1e-12);

/// Relative gap between <h, r>_Q and the six-term tracking pairing of the
/// linearized solution, in the problem's adjoint mode.
CheckReport duality_gap_check(const ControlProblem& prob, const SpaceTimeField& u,
                              const SpaceTimeField& h, double tol = 1e-10);

/// Continuous-mode duality gap at nt and 2 nt; the gap ratio must lie in
/// [ratio_lo, ratio_hi]. `make` builds the problem, control and direction for
/// a given number of steps.
struct DualityInstance {
  ControlProblem problem;
  SpaceTimeField control;
  SpaceTimeField direction;
};
CheckReport duality_refinement_check(const std::function<DualityInstance(int)>& make, int nt,
                                     double ratio_lo = 1.5, double ratio_hi = 2.5);

/// mean(phi^{n+1}) (1 + tau gamma) = mean(phi^n) + tau mean(f^{n+1}) per step;
/// with f = 0 additionally mean(phi^n) = mean(phi0) / (1 + tau gamma)^n.
CheckReport mass_balance_check(const StateTrajectory& traj, const SpaceTimeField& f,
                               double gamma, const Grid& grid, const TimeGrid& time,
                               double tol = 1e-12);

/// Spatially uniform stationary data: phi = c, v = w1, w^n = w0 + n tau w1.
CheckReport uniform_state_check(const StateSystem& sys, double tol = 1e-11);

/// Runs the state solver (after the compatibility gate), reports separation
/// margins, clipping and max |F^(i)(phi)| for i = 0..3.
CheckReport separation_check(const StateSystem& sys, const SpaceTimeField& control);

enum class MmsKind {
  Constant,  // spatially uniform stationary solution, scheme exact
  Space,     // stationary phi*, w* linear in t: time stepping exact, O(h^2)
  Time,      // manufactured with the discrete Laplacian: space exact, O(tau)
};
std::string to_string(MmsKind kind);

/// Manufactured-solution refinement study (Regular potential). `levels` are
/// nodes per direction (Space, Constant) or time steps (Time).
CheckReport mms_convergence_check(int dim, MmsKind kind, const std::vector<int>& levels,
                                  double order_tol = 0.3);

/// -Lap N psi = psi and <psi, N zeta> = <zeta, N psi> on random zero-mean fields.
CheckReport inverse_neumann_check(const Grid& grid, std::uint64_t seed, int samples = 5,
                                  double residual_tol = 1e-10, double symmetry_tol = 1e-12);

// ---------------------------------------------------------------------------
// Reference instances used by the battery, the tests and the CLI demos.

/// 1D Regular potential on [0,1], smooth data, all six tracking weights
/// active with nontrivial targets, nu = 0.1, box [-10, 10].
ControlProblem regular_reference_1d(int nx, int nt, double final_time,
                                    AdjointMode mode = AdjointMode::Transpose);
/// 2D analogue on [0,1]^2.
ControlProblem regular_reference_2d(int n, int nt, double final_time,
                                    AdjointMode mode = AdjointMode::Transpose);
/// Smooth control and perturbation direction on the problem's grids.
SpaceTimeField reference_control(const Grid& g, const TimeGrid& t);
SpaceTimeField reference_direction(const Grid& g, const TimeGrid& t);

/// 2D logarithmic potential (c1 = 2), phi0 = 0.2 cos-bump, f = 0.
StateSystem logarithmic_reference_2d(int n, int nt, double final_time);
/// Control bounded by +-1 used with the logarithmic reference.
SpaceTimeField bounded_heat_source(const Grid& g, const TimeGrid& t);

/// Inverse-source recovery: temperature and temperature-rate targets
/// generated from a known interior control, weights 1e-2, nu given.
struct InverseSourceCase {
  ControlProblem problem;
  SpaceTimeField truth;
};
InverseSourceCase inverse_source_case(int nx, int nt, double final_time, double nu);

/// Projected-gradient run from u = 0: convergence, monotone costs and the
/// optimality characterization u = P(-r/nu) at the returned control.
CheckReport inverse_source_check(const InverseSourceCase& c, const OptimizeConfig& cfg,
                                 double projection_tol = 1e-3);

/// Full battery. quick = smaller instances.
std::vector<CheckReport> run_battery(bool quick);

}  // namespace nch
