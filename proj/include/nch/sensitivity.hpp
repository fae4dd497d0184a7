#pragma once

#include <array>
#include <string>

#include "nch/geometry.hpp"
#include "nch/state_solver.hpp"

namespace nch {

/// Which discrete adjoint to use.
///
/// Transpose: the exact transpose of the linearized time-stepping scheme, so
/// that <h, dJ> is the derivative of the discrete reduced cost to rounding.
/// Continuous: the continuous adjoint system discretized on its own by
/// backward implicit Euler; agrees with Transpose up to O(tau).
enum class AdjointMode { Transpose, Continuous };

std::string to_string(AdjointMode mode);
AdjointMode adjoint_mode_from_string(const std::string& s);

/// Tracking weights, regularization weight and targets of the cost functional
///
///   a1/2 ||phi - phi_Q||_Q^2 + a2/2 |phi(T) - phi_O|^2
/// + a3/2 ||w - w_Q||_Q^2     + a4/2 |w(T) - w_O|^2
/// + a5/2 ||w_t - w'_Q||_Q^2  + a6/2 |w_t(T) - w'_O|^2 + nu/2 ||u||_Q^2.
struct CostData {
  std::array<double, 6> alpha{};
  double nu = 0.0;
  SpaceTimeField phi_Q;
  SpaceTimeField w_Q;
  SpaceTimeField dw_Q;
  Field phi_Omega;
  Field w_Omega;
  Field dw_Omega;

  /// Zero targets, the given weights.
  static CostData zero_targets(const Grid& g, const TimeGrid& t, std::array<double, 6> alpha,
                               double nu);
  /// Nonnegative weights, not all zero; conforming targets.
  void validate(const Grid& g, const TimeGrid& t) const;
};

/// (xi, eta, zeta, d/dt zeta) of the linearized system.
struct LinearizedTrajectory {
  SpaceTimeField xi;
  SpaceTimeField eta;
  SpaceTimeField zeta;
  SpaceTimeField dzeta;
};

/// Adjoint variables (p, q, r) and R = 1 (*) r at every time level; level nt
/// holds the final data
///   p(T) = a2 (phi(T) - phi_O) - lambda a6 (w_t(T) - w'_O),  r(T) = a6 (w_t(T) - w'_O),
/// q(T) = -Lap p(T) and R(T) = 0. R^n = R^{n+1} + tau r^n.
struct AdjointTrajectory {
  SpaceTimeField p;
  SpaceTimeField q;
  SpaceTimeField r;
  SpaceTimeField R;
  AdjointMode mode = AdjointMode::Transpose;

  /// The field paired with a control perturbation h in <h, .>_Q.
  ///
  /// Continuous mode: r itself. Transpose mode: level n (n >= 1) is r^{n-1},
  /// the multiplier of the step t_{n-1} -> t_n that the control level u^n
  /// drives. Level 0 carries no weight in <., .>_Q and is set to zero.
  SpaceTimeField control_sensitivity() const;
};

/// Linearized system around `base` for the control direction h. Transpose mode
/// differentiates the convex-split scheme (beta' at the new level, pi' at the
/// old one); continuous mode uses F''(phi) at the new level throughout.
LinearizedTrajectory solve_linearized(const StateSystem& sys, const StateTrajectory& base,
                                      const SpaceTimeField& h,
                                      AdjointMode mode = AdjointMode::Transpose);

AdjointTrajectory solve_adjoint(const StateSystem& sys, const StateTrajectory& base,
                                const CostData& cost, AdjointMode mode = AdjointMode::Transpose);

/// The six tracking terms of the cost derivative along (xi, zeta):
/// a1 <phi - phi_Q, xi>_Q + a2 <phi(T) - phi_O, xi(T)> + a3 <w - w_Q, zeta>_Q
/// + a4 <w(T) - w_O, zeta(T)> + a5 <w_t - w'_Q, zeta_t>_Q + a6 <w_t(T) - w'_O, zeta_t(T)>.
double tracking_pairing(const StateSystem& sys, const StateTrajectory& base,
                        const LinearizedTrajectory& lin, const CostData& cost);

}  // namespace nch
