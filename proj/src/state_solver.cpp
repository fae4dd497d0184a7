#include "nch/state_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nch/errors.hpp"
#include "step_operator.hpp"

namespace nch {

void PhysicalParams::validate() const {
  const double v[] = {gamma, a, b, kappa1, kappa2, lambda};
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw PreconditionError("structural constants gamma, a, b, kappa1, kappa2, lambda must be positive");
    }
  }
}

void StateSystem::validate() const {
  params.validate();
  potential.validate();
  require_conforming(init.phi0, grid);
  require_conforming(init.w0, grid);
  require_conforming(init.w1, grid);
  require_conforming(source, grid, time);
  if (potential.singular()) {
    const auto rep = validate_compatibility(potential, init.phi0, source, params.gamma, grid);
    if (!rep.pass) {
      throw PreconditionError("initial data / source violate the compatibility condition");
    }
  }
}

Field initial_chemical_potential(const StateSystem& sys) {
  Field mu = -laplacian_neumann(sys.init.phi0, sys.grid);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    mu[i] += F_eval(sys.potential, sys.init.phi0[i], 1);
  }
  mu.array() += sys.params.a;
  mu -= sys.params.b * sys.init.w1;
  return mu;
}

namespace {

constexpr double kRoundingUpdate = 1e3 * std::numeric_limits<double>::epsilon();

struct StepData {
  const Field& phi_old;
  const Field& w_old;
  const Field& v_old;
  const Field& f_new;
  const Field& u_new;
};

// Residual of the step equations at (phi, mu, v), stacked like the operator.
Eigen::VectorXd step_residual(const StateSystem& sys, const SparseMatrix& lap,
                              const StepData& d, const Field& pi_old, const Eigen::VectorXd& x) {
  const Eigen::Index n = d.phi_old.size();
  const auto& p = sys.params;
  const double tau = sys.time.tau();
  const auto phi = x.segment(0, n);
  const auto mu = x.segment(n, n);
  const auto v = x.segment(2 * n, n);

  Eigen::VectorXd res(3 * n);
  res.segment(0, n) = (phi - d.phi_old) / tau - lap * mu + p.gamma * phi - d.f_new;

  Field beta(n);
  for (Eigen::Index i = 0; i < n; ++i) beta[i] = convex_part_clipped(sys.potential, phi[i], 1);
  res.segment(n, n) = mu + lap * phi - beta - pi_old;
  res.segment(n, n).array() += -p.a;
  res.segment(n, n) += p.b * v;

  const Field w_new = d.w_old + tau * v;
  res.segment(2 * n, n) = (v - d.v_old) / tau - lap * (p.kappa1 * v + p.kappa2 * w_new) +
                          p.lambda * (phi - d.phi_old) / tau - d.u_new;
  return res;
}

}  // namespace

StateTrajectory solve_state(const StateSystem& sys, const SpaceTimeField& control) {
  sys.validate();
  require_conforming(control, sys.grid, sys.time);

  const int nt = sys.time.steps();
  const Eigen::Index n = static_cast<Eigen::Index>(sys.grid.size());
  const double tau = sys.time.tau();

  StateTrajectory traj;
  traj.phi = SpaceTimeField(sys.grid, sys.time);
  traj.mu = SpaceTimeField(sys.grid, sys.time);
  traj.w = SpaceTimeField(sys.grid, sys.time);
  traj.v = SpaceTimeField(sys.grid, sys.time);
  traj.phi[0] = sys.init.phi0;
  traj.w[0] = sys.init.w0;
  traj.v[0] = sys.init.w1;
  traj.mu[0] = initial_chemical_potential(sys);
  traj.steps.reserve(static_cast<std::size_t>(nt));

  detail::StepOperator op(sys.grid, sys.params, tau);
  const auto& lap = op.laplacian();

  Eigen::VectorXd x(3 * n);
  for (int k = 0; k < nt; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const StepData d{traj.phi[kk], traj.w[kk], traj.v[kk], sys.source[kk + 1], control[kk + 1]};
    Field pi_old(n);
    for (Eigen::Index i = 0; i < n; ++i) pi_old[i] = concave_part(sys.potential, d.phi_old[i], 1);

    // Warm start from the previous level.
    x << traj.phi[kk], traj.mu[kk], traj.v[kk];
    Eigen::VectorXd res = step_residual(sys, lap, d, pi_old, x);
    double rnorm = res.lpNorm<Eigen::Infinity>();

    StepDiagnostics diag;
    while (rnorm > sys.newton.tol) {
      if (diag.iterations >= sys.newton.max_iter || !std::isfinite(rnorm)) {
        throw StepFailure(k, rnorm);
      }
      ++diag.iterations;
      Field curvature(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        curvature[i] = convex_part_clipped(sys.potential, x[i], 2);
      }
      op.factorize(curvature);
      const Eigen::VectorXd dx = op.solve(-res);

      double step = 1.0;
      Eigen::VectorXd trial = x + dx;
      Eigen::VectorXd trial_res = step_residual(sys, lap, d, pi_old, trial);
      double trial_norm = trial_res.lpNorm<Eigen::Infinity>();
      int halvings = 0;
      while (!(trial_norm < rnorm) && halvings < sys.newton.max_halvings) {
        step *= 0.5;
        ++halvings;
        trial = x + step * dx;
        trial_res = step_residual(sys, lap, d, pi_old, trial);
        trial_norm = trial_res.lpNorm<Eigen::Infinity>();
      }
      diag.halvings += halvings;
      if (!(trial_norm < rnorm) && trial_norm > sys.newton.tol) {
        // Residual at its rounding floor: the Newton update no longer moves x.
        const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
        if (dx.lpNorm<Eigen::Infinity>() <= kRoundingUpdate * scale) break;
        throw StepFailure(k, rnorm);
      }
      x = std::move(trial);
      res = std::move(trial_res);
      rnorm = trial_norm;
    }
    diag.residual = rnorm;

    traj.phi[kk + 1] = x.segment(0, n);
    traj.mu[kk + 1] = x.segment(n, n);
    traj.v[kk + 1] = x.segment(2 * n, n);
    traj.w[kk + 1] = traj.w[kk] + tau * traj.v[kk + 1];
    const int clipped = count_clipped(sys.potential, traj.phi[kk + 1]);
    if (clipped > 0) throw SeparationError(k + 1, clipped);
    traj.steps.push_back(diag);
  }
  return traj;
}

double ResidualReport::max() const {
  double m = 0.0;
  for (const auto* v : {&phi_eq, &mu_eq, &w_eq, &w_update}) {
    for (double x : *v) m = std::max(m, x);
  }
  return m;
}

ResidualReport residual_report(const StateTrajectory& traj, const StateSystem& sys,
                               const SpaceTimeField& control) {
  const auto& g = sys.grid;
  const auto& p = sys.params;
  const double tau = sys.time.tau();
  ResidualReport rep;
  const std::size_t nt = traj.phi.size() - 1;
  for (std::size_t k = 0; k < nt; ++k) {
    const Field& phi0 = traj.phi[k];
    const Field& phi1 = traj.phi[k + 1];
    const Field& mu1 = traj.mu[k + 1];
    const Field& v0 = traj.v[k];
    const Field& v1 = traj.v[k + 1];
    const Field& w1 = traj.w[k + 1];

    Field r1 = (phi1 - phi0) / tau - laplacian_neumann(mu1, g) + p.gamma * phi1 - sys.source[k + 1];
    rep.phi_eq.push_back(r1.lpNorm<Eigen::Infinity>());

    double r2max = 0.0;
    const Field lap_phi = laplacian_neumann(phi1, g);
    for (Eigen::Index i = 0; i < phi1.size(); ++i) {
      double r2;
      try {
        r2 = mu1[i] + lap_phi[i] - convex_part(sys.potential, phi1[i], 1) -
             concave_part(sys.potential, phi0[i], 1) - p.a + p.b * v1[i];
      } catch (const DomainError&) {
        r2 = std::numeric_limits<double>::infinity();
      }
      r2max = std::max(r2max, std::abs(r2));
    }
    rep.mu_eq.push_back(r2max);

    Field r3 = (v1 - v0) / tau - laplacian_neumann(p.kappa1 * v1 + p.kappa2 * w1, g) +
               p.lambda * (phi1 - phi0) / tau - control[k + 1];
    rep.w_eq.push_back(r3.lpNorm<Eigen::Infinity>());

    Field r4 = w1 - traj.w[k] - tau * v1;
    rep.w_update.push_back(r4.lpNorm<Eigen::Infinity>());
  }
  return rep;
}

}  // namespace nch
