#include <cmath>

#include "doctest.h"
#include "nch/errors.hpp"
#include "nch/optimizer.hpp"
#include "nch/verification.hpp"
#include "test_support.hpp"

using namespace nch;
using doctest::Approx;

namespace {

// All-zero cost weights except nu, so J(u) = nu/2 ||u||_Q^2 whatever the state.
ControlProblem regularization_only(double nu, double lo = -10.0, double hi = 10.0) {
  auto prob = regular_reference_1d(8, 8, 0.5);
  prob.cost.alpha = {0, 0, 0, 0, 0, 0};
  prob.cost.nu = nu;
  prob.bounds = ControlBounds::constant(prob.state.grid, prob.state.time, lo, hi);
  return prob;
}

}  // namespace

TEST_CASE("cost functional oracles") {
  const auto prob = regular_reference_1d(10, 10, 0.5);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto u = reference_control(g, t);
  const auto traj = solve_state(prob.state, u);

  SUBCASE("targets equal to the state give zero tracking cost") {
    CostData c = prob.cost;
    c.phi_Q = traj.phi;
    c.w_Q = traj.w;
    c.dw_Q = traj.v;
    c.phi_Omega = traj.phi.back();
    c.w_Omega = traj.w.back();
    c.dw_Omega = traj.v.back();
    c.nu = 0.0;
    CHECK(cost(traj, u, c, g, t) == 0.0);
  }
  SUBCASE("regularization term of a constant control") {
    const double c = 1.7;
    const double nu = 0.3;
    CostData cd = CostData::zero_targets(g, t, {0, 0, 0, 0, 0, 0}, nu);
    CHECK(cost(traj, SpaceTimeField(g, t, c), cd, g, t) ==
          Approx(0.5 * nu * c * c * g.volume() * t.final_time()).epsilon(1e-14));
  }
  SUBCASE("terms agree with an independent summation") {
    const auto terms = cost_terms(traj, u, prob.cost, g, t);
    const auto& cd = prob.cost;
    auto q = [&](const SpaceTimeField& a, const SpaceTimeField& b) {
      long double s = 0.0L;
      for (int n = 1; n <= t.steps(); ++n) {
        const auto k = static_cast<std::size_t>(n);
        for (Eigen::Index i = 0; i < a[k].size(); ++i) {
          const long double d = static_cast<long double>(a[k][i]) - b[k][i];
          s += d * d;
        }
      }
      return static_cast<double>(s * t.tau() * g.cell_volume());
    };
    auto o = [&](const Field& a, const Field& b) {
      long double s = 0.0L;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - b[i];
        s += d * d;
      }
      return static_cast<double>(s * g.cell_volume());
    };
    const std::array<double, 7> expected = {
        0.5 * cd.alpha[0] * q(traj.phi, cd.phi_Q),
        0.5 * cd.alpha[1] * o(traj.phi.back(), cd.phi_Omega),
        0.5 * cd.alpha[2] * q(traj.w, cd.w_Q),
        0.5 * cd.alpha[3] * o(traj.w.back(), cd.w_Omega),
        0.5 * cd.alpha[4] * q(traj.v, cd.dw_Q),
        0.5 * cd.alpha[5] * o(traj.v.back(), cd.dw_Omega),
        0.5 * cd.nu * q(u, SpaceTimeField(g, t))};
    for (std::size_t k = 0; k < 7; ++k) {
      CHECK(terms.terms[k] == Approx(expected[k]).epsilon(1e-12));
    }
    CHECK(terms.total() == Approx(reduced_cost(prob, u)).epsilon(1e-14));
  }
}

TEST_CASE("reduced gradient special cases") {
  const auto prob = regular_reference_1d(8, 8, 0.5);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto u = reference_control(g, t);
  const auto base = solve_state(prob.state, u);
  const auto adj = solve_adjoint(prob.state, base, prob.cost);

  CHECK(test::max_diff(reduced_gradient(u, adj, 0.0), adj.control_sensitivity()) == 0.0);

  CostData none = prob.cost;
  none.alpha = {0, 0, 0, 0, 0, 0};
  const auto adj0 = solve_adjoint(prob.state, base, none);
  const auto grad = reduced_gradient(u, adj0, 1.0);
  for (std::size_t n = 1; n < u.size(); ++n) {
    CHECK((grad[n] - u[n]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("projection onto the box") {
  const Grid g = Grid::line(1.0, 6);
  const TimeGrid t(1.0, 3);
  const auto box = ControlBounds::constant(g, t, -0.5, 0.25);
  const auto u = test::random_space_time(g, t, 11);
  const auto p = project(u, box);
  for (std::size_t n = 0; n < u.size(); ++n) {
    for (Eigen::Index i = 0; i < p[n].size(); ++i) {
      CHECK(p[n][i] >= -0.5);
      CHECK(p[n][i] <= 0.25);
      if (u[n][i] >= -0.5 && u[n][i] <= 0.25) CHECK(p[n][i] == u[n][i]);
    }
  }
  CHECK(test::max_diff(project(p, box), p) == 0.0);
  CHECK(active_fraction(SpaceTimeField(g, t, 0.25), box) == 1.0);
  CHECK(active_fraction(SpaceTimeField(g, t, 0.0), box) == 0.0);
  CHECK_THROWS_AS(ControlBounds::constant(g, t, 1.0, 0.0).validate(g, t), PreconditionError);
}

TEST_CASE("stationarity residual") {
  const Grid g = Grid::line(1.0, 6);
  const TimeGrid t(1.0, 4);
  const auto box = ControlBounds::constant(g, t, -1.0, 1.0);
  const auto u = SpaceTimeField(g, t, 0.5);
  CHECK(stationarity_residual(u, SpaceTimeField(g, t), box, 1.0, g, t) == 0.0);
  // On the upper bound with a gradient pushing outward the point is stationary.
  CHECK(stationarity_residual(SpaceTimeField(g, t, 1.0), SpaceTimeField(g, t, -3.0), box, 1.0, g,
                              t) == 0.0);
  // Interior point: residual is s ||g||_Q while the step stays inside.
  CHECK(stationarity_residual(u, SpaceTimeField(g, t, 0.2), box, 0.5, g, t) ==
        Approx(0.1 * std::sqrt(g.volume() * t.final_time())));
}

TEST_CASE("optimizer on the pure regularization problem") {
  const auto prob = regularization_only(1.0);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;

  SUBCASE("stationary start returns at once") {
    const auto res = optimize(prob, SpaceTimeField(g, t), OptimizeConfig{});
    CHECK(res.converged);
    CHECK(res.iterations == 0);
  }
  SUBCASE("converges to zero with nonincreasing cost") {
    OptimizeConfig cfg;
    cfg.stationarity_tol = 1e-8;
    const auto res = optimize(prob, reference_control(g, t), cfg);
    CHECK(res.converged);
    CHECK(norm_q(res.control, g, t) <= 1e-6);
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
      CHECK(res.trace[k].cost <= res.trace[k - 1].cost);
    }
    const auto adj = solve_adjoint(prob.state, solve_state(prob.state, res.control), prob.cost);
    CHECK(projection_residual(prob, res.control, adj) <= 1e-6);
  }
  SUBCASE("box-constrained minimizer sits on the bound") {
    const auto boxed = regularization_only(1.0, 0.5, 2.0);
    const auto res = optimize(boxed, SpaceTimeField(g, t, 1.5), OptimizeConfig{});
    CHECK(res.converged);
    for (std::size_t n = 1; n < res.control.size(); ++n) {
      CHECK((res.control[n].array() - 0.5).abs().maxCoeff() <= 1e-6);
    }
  }
  SUBCASE("failed backtracking raises with the partial trace") {
    OptimizeConfig cfg;
    cfg.initial_step = 1e6;
    cfg.max_backtracks = 1;
    try {
      optimize(prob, reference_control(g, t), cfg);
      FAIL("expected StalledDescent");
    } catch (const StalledDescent& e) {
      CHECK_FALSE(e.partial().trace.empty());
    }
  }
}

TEST_CASE("projection residual") {
  auto prob = regularization_only(0.5);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto u = reference_control(g, t);
  const auto adj = solve_adjoint(prob.state, solve_state(prob.state, u), prob.cost);
  CHECK(projection_residual(prob, SpaceTimeField(g, t), adj) == 0.0);
  CHECK(projection_residual(prob, u, adj) > 0.1);
  prob.cost.nu = 0.0;
  CHECK(std::isnan(projection_residual(prob, u, adj)));
}

TEST_CASE("configuration validation") {
  OptimizeConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.backtrack = 1.0;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  cfg = OptimizeConfig{};
  cfg.armijo = 0.0;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  cfg = OptimizeConfig{};
  cfg.max_backtracks = 0;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);

  const Grid g = Grid::line(1.0, 4);
  const TimeGrid t(1.0, 2);
  CHECK_THROWS_AS(CostData::zero_targets(g, t, {0, 0, 0, 0, 0, 0}, 0.0).validate(g, t),
                  PreconditionError);
  CHECK_THROWS_AS(CostData::zero_targets(g, t, {-1, 0, 0, 0, 0, 0}, 1.0).validate(g, t),
                  PreconditionError);
}
