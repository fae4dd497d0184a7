#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nch/errors.hpp"
#include "nch/potentials.hpp"

using namespace nch;
using doctest::Approx;

namespace {

double central_diff(const PotentialSpec& s, double r, int order, double h) {
  return (F_eval(s, r + h, order) - F_eval(s, r - h, order)) / (2.0 * h);
}

}  // namespace

TEST_CASE("regular potential values") {
  const auto s = PotentialSpec::regular();
  CHECK(F_eval(s, 0.0, 0) == Approx(0.25));
  CHECK(F_eval(s, 1.0, 0) == Approx(0.0));
  CHECK(F_eval(s, 1.0, 1) == Approx(0.0));
  CHECK(F_eval(s, -1.0, 1) == Approx(0.0));
  CHECK(F_eval(s, 0.0, 2) == Approx(-1.0));
  CHECK(F_eval(s, 1.5, 1) == Approx(1.875));
  CHECK(F_eval(s, 0.5, 3) == Approx(3.0));
  CHECK(std::isinf(s.upper()));
  CHECK(clip(s, 1e6) == 1e6);
}

TEST_CASE("logarithmic potential values") {
  const auto s = PotentialSpec::logarithmic(2.0);
  CHECK(F_eval(s, 0.0, 0) == Approx(0.0));
  CHECK(F_eval(s, 0.0, 1) == Approx(0.0));
  CHECK(F_eval(s, 1.0, 0) == Approx(2.0 * std::numbers::ln2 - 2.0));
  CHECK(F_eval(s, -1.0, 0) == Approx(2.0 * std::numbers::ln2 - 2.0));
  CHECK(F_eval(s, 0.5, 1) == Approx(std::log(3.0) - 2.0));
  CHECK_THROWS_AS(F_eval(s, 1.0, 1), DomainError);
  CHECK_THROWS_AS(F_eval(s, -1.2, 0), DomainError);
  CHECK_THROWS_AS(F_eval(s, 0.0, 4), PreconditionError);
  CHECK_THROWS_AS(PotentialSpec::logarithmic(1.0), PreconditionError);
}

TEST_CASE("derivatives are consistent with finite differences") {
  for (const auto& s : {PotentialSpec::regular(), PotentialSpec::logarithmic(2.5),
                        PotentialSpec::quadratic()}) {
    for (double r : {-0.9, -0.4, 0.0, 0.3, 0.85}) {
      for (int order = 0; order < 3; ++order) {
        const double fd = central_diff(s, r, order, 1e-6);
        const double exact = F_eval(s, r, order + 1);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("convex and concave parts add up and have the right signs") {
  for (const auto& s : {PotentialSpec::regular(), PotentialSpec::logarithmic(3.0)}) {
    for (double r = -0.95; r < 0.96; r += 0.05) {
      for (int order = 0; order <= 3; ++order) {
        CHECK(F_eval(s, r, order) == Approx(convex_part(s, r, order) + concave_part(s, r, order)));
      }
      CHECK(convex_part(s, r, 2) >= 0.0);
      CHECK(concave_part(s, r, 2) <= 0.0);
    }
  }
  const auto s = PotentialSpec::logarithmic(2.0);
  for (double r = -0.99; r < 0.995; r += 0.01) CHECK(F_eval(s, r, 2) >= 2.0 - 2.0 * s.c1);
}

TEST_CASE("clipping") {
  const auto s = PotentialSpec::logarithmic(2.0, 1e-6);
  CHECK(clip(s, 1.5) == Approx(1.0 - 1e-6).epsilon(1e-15));
  CHECK(clip(s, -7.0) == Approx(-1.0 + 1e-6).epsilon(1e-15));
  CHECK(clip(s, 0.3) == 0.3);
  CHECK(std::isfinite(F_eval_clipped(s, 1.5, 3)));
  CHECK(count_clipped(s, Field::LinSpaced(5, -1.0, 1.0)) == 2);
  CHECK(count_clipped(PotentialSpec::regular(), Field::Constant(3, 5.0)) == 0);
  CHECK_THROWS_AS((PotentialSpec{PotentialKind::Logarithmic, 2.0, 0.6}.validate()), PreconditionError);
}

TEST_CASE("compatibility of data with the singular potential") {
  const Grid g = Grid::line(1.0, 16);
  const TimeGrid t(1.0, 4);
  const auto s = PotentialSpec::logarithmic(2.0);
  const Field phi0 = g.sample([](double x, double) { return 0.2 * std::cos(std::numbers::pi * x); });

  CHECK(validate_compatibility(s, phi0, SpaceTimeField(g, t), 1.0, g).pass);
  CHECK(validate_compatibility(s, phi0, SpaceTimeField(g, t, 0.5), 1.0, g).pass);

  const auto big = validate_compatibility(s, phi0, SpaceTimeField(g, t, 2.0), 1.0, g);
  CHECK_FALSE(big.pass);
  CHECK(big.entries.size() == 4);
  CHECK_FALSE(big.entries[3].pass);
  CHECK(validate_compatibility(s, phi0, SpaceTimeField(g, t, 2.0), 4.0, g).pass);

  CHECK_FALSE(validate_compatibility(s, g.constant(1.0), SpaceTimeField(g, t), 1.0, g).pass);
  CHECK_FALSE(validate_compatibility(s, g.constant(0.6), SpaceTimeField(g, t, 0.5), 1.0, g).pass);
  CHECK(validate_compatibility(PotentialSpec::regular(), g.constant(3.0), SpaceTimeField(g, t, 9.0),
                               1.0, g)
            .pass);
  CHECK_THROWS_AS(validate_compatibility(s, phi0, SpaceTimeField(g, t), 0.0, g), PreconditionError);
}

TEST_CASE("separation report") {
  const Grid g = Grid::line(1.0, 4);
  const TimeGrid t(1.0, 2);
  const auto s = PotentialSpec::logarithmic(2.0);
  CHECK(separation_report(SpaceTimeField(g, t), s).margin_lo == Approx(1.0));
  CHECK(separation_report(SpaceTimeField(g, t), s).margin_hi == Approx(1.0));
  SpaceTimeField phi(g, t);
  phi[1][2] = 0.97;
  phi[2][0] = -0.5;
  const auto rep = separation_report(phi, s);
  CHECK(rep.margin_hi == Approx(0.03));
  CHECK(rep.margin_lo == Approx(0.5));
  CHECK(rep.separated());
  phi[2][1] = -1.0;
  CHECK_FALSE(separation_report(phi, s).separated());
}

TEST_CASE("kind names round trip") {
  for (auto k : {PotentialKind::Regular, PotentialKind::Logarithmic, PotentialKind::Quadratic}) {
    CHECK(potential_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(potential_kind_from_string("double-well"), PreconditionError);
}
