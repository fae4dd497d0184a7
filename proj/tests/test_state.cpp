#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nch/errors.hpp"
#include "nch/state_solver.hpp"
#include "nch/verification.hpp"
#include "test_support.hpp"

using namespace nch;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

StateSystem small_system(const Grid& g, const TimeGrid& t,
                         PotentialSpec pot = PotentialSpec::regular()) {
  const Field phi0 = g.sample([](double x, double y) { return 0.3 * std::cos(kPi * x) + 0.1 * y; });
  const Field w0 = g.sample([](double x, double) { return 0.2 * std::sin(kPi * x); });
  return StateSystem{g, t, PhysicalParams{}, pot, {phi0, w0, g.constant(0.1)},
                     SpaceTimeField(g, t), NewtonConfig{}};
}

SpaceTimeField smooth_control(const Grid& g, const TimeGrid& t) {
  return SpaceTimeField::sample(g, t, [](double x, double y, double s) {
    return std::cos(kPi * x) * (1.0 + s) + y;
  });
}

}  // namespace

TEST_CASE("uniform stationary data stay put") {
  const Grid g = Grid::rect(1.0, 1.0, 6, 6);
  const TimeGrid t(0.5, 10);
  StateSystem sys = small_system(g, t);
  const double c = 0.35;
  const double w1 = -0.4;
  sys.init = {g.constant(c), g.constant(0.25), g.constant(w1)};
  sys.source = SpaceTimeField(g, t, sys.params.gamma * c);
  const auto traj = solve_state(sys, SpaceTimeField(g, t));
  for (int n = 0; n <= t.steps(); ++n) {
    const auto k = static_cast<std::size_t>(n);
    CHECK((traj.phi[k].array() - c).abs().maxCoeff() <= 1e-11);
    CHECK((traj.w[k].array() - (0.25 + t.t(n) * w1)).abs().maxCoeff() <= 1e-11);
    CHECK((temperature(traj)[k].array() - w1).abs().maxCoeff() <= 1e-11);
  }
  CHECK(uniform_state_check(sys).pass);
}

TEST_CASE("unforced mean decays geometrically") {
  const Grid g = Grid::line(1.0, 32);
  const TimeGrid t(1.0, 20);
  StateSystem sys = small_system(g, t);
  sys.init.phi0.array() += 0.2;
  const auto traj = solve_state(sys, smooth_control(g, t));
  const double m0 = mean(sys.init.phi0, g);
  const double q = 1.0 + t.tau() * sys.params.gamma;
  for (int n = 0; n <= t.steps(); ++n) {
    const double expected = m0 / std::pow(q, n);
    CHECK(std::abs(mean(traj.phi[static_cast<std::size_t>(n)], g) - expected) <= 1e-12);
  }
  CHECK(mass_balance_check(traj, sys.source, sys.params.gamma, g, t).pass);
}

TEST_CASE("mean is at equilibrium when f = gamma * mean(phi0)") {
  const Grid g = Grid::line(1.0, 24);
  const TimeGrid t(0.6, 12);
  StateSystem sys = small_system(g, t);
  sys.params.gamma = 2.5;
  const double m0 = mean(sys.init.phi0, g);
  sys.source = SpaceTimeField(g, t, sys.params.gamma * m0);
  const auto traj = solve_state(sys, smooth_control(g, t));
  for (const auto& phi : traj.phi) CHECK(std::abs(mean(phi, g) - m0) <= 1e-12);
}

TEST_CASE("w is the running integral of the temperature") {
  const Grid g = Grid::rect(1.0, 1.0, 8, 8);
  const TimeGrid t(0.4, 16);
  const StateSystem sys = small_system(g, t);
  const auto traj = solve_state(sys, smooth_control(g, t));
  const auto integral = conv_forward(traj.v, t);
  for (std::size_t n = 0; n < traj.w.size(); ++n) {
    CHECK((traj.w[n] - sys.init.w0 - integral[n]).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  CHECK(traj.steps.size() == static_cast<std::size_t>(t.steps()));
  for (const auto& s : traj.steps) CHECK(s.iterations >= 1);
}

TEST_CASE("residual report") {
  const Grid g = Grid::line(1.0, 24);
  const TimeGrid t(0.5, 10);
  const StateSystem sys = small_system(g, t);
  const auto u = smooth_control(g, t);
  auto traj = solve_state(sys, u);

  const auto rep = residual_report(traj, sys, u);
  CHECK(rep.phi_eq.size() == static_cast<std::size_t>(t.steps()));
  CHECK(rep.max() <= 10.0 * sys.newton.tol);

  traj.phi[4].array() += 1e-3 * g.sample([](double x, double) { return std::cos(2 * kPi * x); }).array();
  CHECK(residual_report(traj, sys, u).max() >= 1e-4);

  SUBCASE("zero trajectory against a constant source") {
    StateSystem z = sys;
    z.init = {g.zeros(), g.zeros(), g.zeros()};
    z.source = SpaceTimeField(g, t, 0.7);
    const StateTrajectory zero{SpaceTimeField(g, t), SpaceTimeField(g, t), SpaceTimeField(g, t),
                               SpaceTimeField(g, t), {}};
    const auto r = residual_report(zero, z, SpaceTimeField(g, t));
    for (double e : r.phi_eq) CHECK(e == Approx(0.7));
    for (double e : r.w_update) CHECK(e == 0.0);
  }
}

TEST_CASE("logarithmic run stays separated") {
  const Grid g = Grid::line(1.0, 32);
  const TimeGrid t(0.2, 20);
  const StateSystem sys = small_system(g, t, PotentialSpec::logarithmic(2.0));
  const auto traj = solve_state(sys, smooth_control(g, t));
  const auto sep = separation_report(traj.phi, sys.potential);
  CHECK(sep.separated());
  for (const auto& phi : traj.phi) CHECK(count_clipped(sys.potential, phi) == 0);
}

TEST_CASE("invalid systems are rejected") {
  const Grid g = Grid::line(1.0, 8);
  const TimeGrid t(1.0, 4);
  StateSystem sys = small_system(g, t);
  CHECK_NOTHROW(sys.validate());

  SUBCASE("nonpositive constants") {
    sys.params.gamma = 0.0;
    CHECK_THROWS_AS(sys.validate(), PreconditionError);
    sys.params.gamma = 1.0;
    sys.params.kappa2 = -1.0;
    CHECK_THROWS_AS(solve_state(sys, SpaceTimeField(g, t)), PreconditionError);
  }
  SUBCASE("nonconforming data") {
    sys.init.w1 = Field::Zero(5);
    CHECK_THROWS_AS(sys.validate(), ConformanceError);
  }
  SUBCASE("nonconforming control") {
    CHECK_THROWS_AS(solve_state(sys, SpaceTimeField(g, TimeGrid(1.0, 5))), ConformanceError);
  }
  SUBCASE("incompatible data for the singular potential") {
    sys.potential = PotentialSpec::logarithmic(2.0);
    sys.init.phi0 = g.constant(1.2);
    CHECK_THROWS_AS(sys.validate(), PreconditionError);
  }
}
