#include "nch/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nch {

ControlBounds ControlBounds::constant(const Grid& g, const TimeGrid& t, double lo, double hi) {
  return {SpaceTimeField(g, t, lo), SpaceTimeField(g, t, hi)};
}

void ControlBounds::validate(const Grid& g, const TimeGrid& t) const {
  require_conforming(lower, g, t);
  require_conforming(upper, g, t);
  for (std::size_t n = 0; n < lower.size(); ++n) {
    if (!lower[n].allFinite() || !upper[n].allFinite()) {
      throw PreconditionError("control bounds must be finite");
    }
    if ((lower[n].array() > upper[n].array()).any()) {
      throw PreconditionError("control bounds need u_min <= u_max everywhere");
    }
  }
}

void ControlProblem::validate() const {
  state.validate();
  cost.validate(state.grid, state.time);
  bounds.validate(state.grid, state.time);
}

void OptimizeConfig::validate() const {
  if (max_iters < 0 || max_backtracks <= 0) throw PreconditionError("iteration caps must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) throw PreconditionError("Armijo parameter must lie in (0,1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw PreconditionError("backtrack factor must lie in (0,1)");
  if (!(initial_step > 0.0)) throw PreconditionError("initial step must be positive");
  if (!(stationarity_tol > 0.0)) throw PreconditionError("stationarity tolerance must be positive");
}

double CostTerms::total() const {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

CostTerms cost_terms(const StateTrajectory& traj, const SpaceTimeField& u, const CostData& cd,
                     const Grid& g, const TimeGrid& t) {
  require_conforming(u, g, t);
  const auto& al = cd.alpha;
  const double vol = g.cell_volume();
  const double tau = t.tau();
  const auto last = static_cast<std::size_t>(t.steps());
  CostTerms c;
  double sphi = 0.0;
  double sw = 0.0;
  double sdw = 0.0;
  double su = 0.0;
  for (std::size_t n = 1; n <= last; ++n) {
    sphi += (traj.phi[n] - cd.phi_Q[n]).squaredNorm();
    sw += (traj.w[n] - cd.w_Q[n]).squaredNorm();
    sdw += (traj.v[n] - cd.dw_Q[n]).squaredNorm();
    su += u[n].squaredNorm();
  }
  c.terms[0] = 0.5 * al[0] * vol * tau * sphi;
  c.terms[1] = 0.5 * al[1] * vol * (traj.phi[last] - cd.phi_Omega).squaredNorm();
  c.terms[2] = 0.5 * al[2] * vol * tau * sw;
  c.terms[3] = 0.5 * al[3] * vol * (traj.w[last] - cd.w_Omega).squaredNorm();
  c.terms[4] = 0.5 * al[4] * vol * tau * sdw;
  c.terms[5] = 0.5 * al[5] * vol * (traj.v[last] - cd.dw_Omega).squaredNorm();
  c.terms[6] = 0.5 * cd.nu * vol * tau * su;
  return c;
}

double cost(const StateTrajectory& traj, const SpaceTimeField& u, const CostData& cd,
            const Grid& g, const TimeGrid& t) {
  return cost_terms(traj, u, cd, g, t).total();
}

double reduced_cost(const ControlProblem& prob, const SpaceTimeField& u) {
  const auto traj = solve_state(prob.state, u);
  return cost(traj, u, prob.cost, prob.state.grid, prob.state.time);
}

SpaceTimeField reduced_gradient(const SpaceTimeField& u, const AdjointTrajectory& adj, double nu) {
  return SpaceTimeField::axpy(adj.control_sensitivity(), nu, u);
}

namespace {

GradientEvaluation gradient_from_state(const ControlProblem& prob, const SpaceTimeField& u,
                                       StateTrajectory traj) {
  GradientEvaluation ev;
  ev.state = std::move(traj);
  ev.cost = cost(ev.state, u, prob.cost, prob.state.grid, prob.state.time);
  try {
    ev.adjoint = solve_adjoint(prob.state, ev.state, prob.cost, prob.mode);
  } catch (const SensitivityError&) {
    throw;
  } catch (const Error& e) {
    throw SensitivityError(std::string("adjoint solve failed: ") + e.what());
  }
  ev.gradient = reduced_gradient(u, ev.adjoint, prob.cost.nu);
  return ev;
}

}  // namespace

GradientEvaluation evaluate_gradient(const ControlProblem& prob, const SpaceTimeField& u) {
  return gradient_from_state(prob, u, solve_state(prob.state, u));
}

SpaceTimeField project(const SpaceTimeField& u, const ControlBounds& bounds) {
  SpaceTimeField out = u;
  for (std::size_t n = 0; n < u.size(); ++n) {
    out[n] = u[n].cwiseMin(bounds.upper[n]).cwiseMax(bounds.lower[n]);
  }
  return out;
}

double stationarity_residual(const SpaceTimeField& u, const SpaceTimeField& g,
                             const ControlBounds& bounds, double s, const Grid& grid,
                             const TimeGrid& time) {
  const SpaceTimeField moved = project(SpaceTimeField::axpy(u, -s, g), bounds);
  return norm_q(u - moved, grid, time);
}

double active_fraction(const SpaceTimeField& u, const ControlBounds& bounds) {
  std::size_t active = 0;
  std::size_t total = 0;
  for (std::size_t n = 1; n < u.size(); ++n) {
    active += static_cast<std::size_t>(
        ((u[n].array() == bounds.lower[n].array()) || (u[n].array() == bounds.upper[n].array()))
            .count());
    total += static_cast<std::size_t>(u[n].size());
  }
  return total == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(total);
}

double projection_residual(const ControlProblem& prob, const SpaceTimeField& u,
                           const AdjointTrajectory& adj) {
  const double nu = prob.cost.nu;
  if (!(nu > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  SpaceTimeField target = adj.control_sensitivity();
  for (std::size_t n = 0; n < target.size(); ++n) target[n] /= -nu;
  return norm_q(u - project(target, prob.bounds), g, t) / std::max(1.0, norm_q(u, g, t));
}

OptimizeResult optimize(const ControlProblem& prob, const SpaceTimeField& u_init,
                        const OptimizeConfig& cfg) {
  prob.validate();
  cfg.validate();
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;

  OptimizeResult res;
  res.control = project(u_init, prob.bounds);
  GradientEvaluation ev = evaluate_gradient(prob, res.control);
  const double g0 = norm_q(ev.gradient, g, t);
  res.probe_step = g0 > 0.0 ? cfg.initial_step / g0 : cfg.initial_step;
  double step = res.probe_step;

  for (int k = 0;; ++k) {
    const double unorm = norm_q(res.control, g, t);
    const double stat = stationarity_residual(res.control, ev.gradient, prob.bounds,
                                              res.probe_step, g, t) /
                        std::max(1.0, unorm);
    res.trace.push_back({k, ev.cost, stat, k == 0 ? 0.0 : step,
                         active_fraction(res.control, prob.bounds)});
    res.iterations = k;
    if (stat <= cfg.stationarity_tol) {
      res.converged = true;
      break;
    }
    if (k >= cfg.max_iters) break;

    bool accepted = false;
    for (int b = 0; b <= cfg.max_backtracks; ++b) {
      SpaceTimeField cand = project(SpaceTimeField::axpy(res.control, -step, ev.gradient),
                                    prob.bounds);
      const double dist2 = std::pow(norm_q(cand - res.control, g, t), 2);
      StateTrajectory traj = solve_state(prob.state, cand);
      const double jc = cost(traj, cand, prob.cost, g, t);
      if (jc <= ev.cost - (cfg.armijo / step) * dist2) {
        res.control = std::move(cand);
        ev = gradient_from_state(prob, res.control, std::move(traj));
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      throw StalledDescent("Armijo line search failed after " +
                               std::to_string(cfg.max_backtracks) + " halvings",
                           res);
    }
  }
  return res;
}

}  // namespace nch
