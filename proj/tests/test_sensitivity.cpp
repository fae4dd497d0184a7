#include <cmath>

#include "doctest.h"
#include "nch/errors.hpp"
#include "nch/optimizer.hpp"
#include "nch/verification.hpp"
#include "test_support.hpp"

using namespace nch;
using doctest::Approx;

namespace {

double max_abs(const LinearizedTrajectory& l) {
  return std::max({l.xi.max_abs(), l.eta.max_abs(), l.zeta.max_abs(), l.dzeta.max_abs()});
}

}  // namespace

TEST_CASE("linearized system") {
  const auto prob = regular_reference_1d(16, 16, 0.5);
  const auto& sys = prob.state;
  const auto& g = sys.grid;
  const auto& t = sys.time;
  const auto base = solve_state(sys, reference_control(g, t));

  SUBCASE("zero direction gives zero") {
    CHECK(max_abs(solve_linearized(sys, base, SpaceTimeField(g, t))) == 0.0);
  }
  SUBCASE("linear in the direction") {
    const auto h1 = reference_direction(g, t);
    const auto h2 = test::random_space_time(g, t, 7);
    const auto l1 = solve_linearized(sys, base, h1);
    const auto l2 = solve_linearized(sys, base, h2);
    const auto l12 = solve_linearized(sys, base, SpaceTimeField::axpy(h2, 2.0, h1));
    const double scale = std::max(max_abs(l1), max_abs(l2));
    CHECK(test::max_diff(l12.xi, SpaceTimeField::axpy(l2.xi, 2.0, l1.xi)) <= 1e-10 * scale);
    CHECK(test::max_diff(l12.zeta, SpaceTimeField::axpy(l2.zeta, 2.0, l1.zeta)) <= 1e-10 * scale);
  }
  SUBCASE("order parameter perturbation keeps zero mean") {
    const auto lin = solve_linearized(sys, base, test::random_space_time(g, t, 3));
    for (const auto& xi : lin.xi) CHECK(std::abs(mean(xi, g)) <= 1e-13);
  }
  SUBCASE("finite-difference remainder is second order") {
    const auto rep = linearization_order_check(prob, reference_control(g, t),
                                               reference_direction(g, t), {1e-1, 1e-2, 1e-3});
    CHECK(rep.pass);
  }
}

TEST_CASE("adjoint final data and trivial weights") {
  auto prob = regular_reference_1d(12, 10, 0.4);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto base = solve_state(prob.state, reference_control(g, t));

  SUBCASE("no tracking weights") {
    prob.cost.alpha = {0, 0, 0, 0, 0, 0};
    for (auto mode : {AdjointMode::Transpose, AdjointMode::Continuous}) {
      const auto adj = solve_adjoint(prob.state, base, prob.cost, mode);
      CHECK(adj.p.max_abs() == 0.0);
      CHECK(adj.r.max_abs() == 0.0);
      CHECK(adj.R.max_abs() == 0.0);
    }
  }
  SUBCASE("terminal conditions") {
    const auto& c = prob.cost;
    const auto adj = solve_adjoint(prob.state, base, c);
    const Field dwT = base.v.back() - c.dw_Omega;
    const Field pT = c.alpha[1] * (base.phi.back() - c.phi_Omega) -
                     prob.state.params.lambda * c.alpha[5] * dwT;
    CHECK((adj.r.back() - c.alpha[5] * dwT).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((adj.p.back() - pT).lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK((adj.q.back() + laplacian_neumann(adj.p.back(), g)).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(adj.R.back().lpNorm<Eigen::Infinity>() == 0.0);
    for (int n = t.steps() - 1; n >= 0; --n) {
      const auto k = static_cast<std::size_t>(n);
      CHECK((adj.R[k] - adj.R[k + 1] - t.tau() * adj.r[k]).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
    CHECK(adj.control_sensitivity()[0].lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("transpose adjoint against a dense basis sweep") {
  const auto prob = regular_reference_1d(8, 8, 0.5);
  const auto& sys = prob.state;
  const auto& g = sys.grid;
  const auto& t = sys.time;
  const auto base = solve_state(sys, reference_control(g, t));
  const auto sens = solve_adjoint(sys, base, prob.cost).control_sensitivity();
  const double weight = t.tau() * g.cell_volume();

  double worst = 0.0;
  double scale = 0.0;
  for (int n = 1; n <= t.steps(); ++n) {
    for (int i = 0; i < g.nx(); ++i) {
      SpaceTimeField e(g, t);
      e[static_cast<std::size_t>(n)][i] = 1.0;
      const double exact = tracking_pairing(sys, base, solve_linearized(sys, base, e), prob.cost);
      const double adjoint = weight * sens[static_cast<std::size_t>(n)][i];
      worst = std::max(worst, std::abs(exact - adjoint));
      scale = std::max(scale, std::abs(exact));
    }
  }
  CHECK(scale > 0.0);
  CHECK(worst <= 1e-10 * scale);
}

TEST_CASE("gradient matches finite differences of the reduced cost") {
  const auto prob = regular_reference_1d(16, 16, 0.5);
  const auto& g = prob.state.grid;
  const auto& t = prob.state.time;
  const auto rep = fd_gradient_check(prob, reference_control(g, t), reference_direction(g, t),
                                     {1e-3, 1e-4, 1e-5});
  CHECK(rep.pass);
  CHECK(rep.measured <= 1e-6);
}

TEST_CASE("continuous adjoint approaches the transpose one") {
  auto gap = [](int nt) {
    const auto tp = regular_reference_1d(16, nt, 0.5, AdjointMode::Transpose);
    const auto& g = tp.state.grid;
    const auto& t = tp.state.time;
    const auto base = solve_state(tp.state, reference_control(g, t));
    const auto a = solve_adjoint(tp.state, base, tp.cost, AdjointMode::Transpose);
    const auto b = solve_adjoint(tp.state, base, tp.cost, AdjointMode::Continuous);
    const auto sa = a.control_sensitivity();
    const auto sb = b.control_sensitivity();
    return norm_q(SpaceTimeField::axpy(sa, -1.0, sb), g, t) / norm_q(sa, g, t);
  };
  const double coarse = gap(16);
  const double fine = gap(32);
  CHECK(fine < coarse);
  CHECK(coarse / fine == Approx(2.0).epsilon(0.25));
}

TEST_CASE("mode names round trip") {
  for (auto m : {AdjointMode::Transpose, AdjointMode::Continuous}) {
    CHECK(adjoint_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(adjoint_mode_from_string("discrete"), PreconditionError);
}
