#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nch/errors.hpp"
#include "nch/geometry.hpp"
#include "test_support.hpp"

using namespace nch;
using nch::test::random_field;

namespace {

constexpr double kPi = std::numbers::pi;

// Three-point stencil with mirrored ghosts, assembled entry by entry.
Eigen::MatrixXd dense_laplacian(const Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const double ix2 = 1.0 / (g.hx() * g.hx());
  const double iy2 = 1.0 / (g.hy() * g.hy());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const auto row = g.index(i, j);
      const int il = i > 0 ? i - 1 : i;
      const int ir = i < g.nx() - 1 ? i + 1 : i;
      A(row, g.index(il, j)) += ix2;
      A(row, g.index(ir, j)) += ix2;
      A(row, row) -= 2.0 * ix2;
      if (g.dim() == 2) {
        const int jd = j > 0 ? j - 1 : j;
        const int ju = j < g.ny() - 1 ? j + 1 : j;
        A(row, g.index(i, jd)) += iy2;
        A(row, g.index(i, ju)) += iy2;
        A(row, row) -= 2.0 * iy2;
      }
    }
  }
  return A;
}

double eigenvalue_1d(const Grid& g, int k) {
  return 2.0 / (g.hx() * g.hx()) * (1.0 - std::cos(k * kPi * g.hx() / g.lx()));
}

Field cosine_mode(const Grid& g, int k) {
  return g.sample([&](double x, double) { return std::cos(k * kPi * x / g.lx()); });
}

}  // namespace

TEST_CASE("grid construction and sampling") {
  const Grid g = Grid::rect(2.0, 1.0, 8, 4);
  CHECK(g.size() == 32);
  CHECK(g.hx() == doctest::Approx(0.25));
  CHECK(g.volume() == doctest::Approx(2.0));
  CHECK(g.x(0) == doctest::Approx(0.125));
  CHECK(g.index(3, 2) == 3 + 8 * 2);
  const Field f = g.sample([](double x, double y) { return x + 10 * y; });
  CHECK(f[g.index(1, 1)] == doctest::Approx(g.x(1) + 10 * g.y(1)));
  CHECK_THROWS_AS(Grid::line(1.0, 1), PreconditionError);
  CHECK_THROWS_AS(TimeGrid(0.0, 4), PreconditionError);
}

TEST_CASE("conformance is enforced") {
  const Grid g = Grid::line(1.0, 8);
  const TimeGrid t(1.0, 4);
  CHECK_THROWS_AS(require_conforming(Field::Zero(7), g), ConformanceError);
  CHECK_THROWS_AS(require_conforming(SpaceTimeField(g, TimeGrid(1.0, 5)), g, t), ConformanceError);
  CHECK_NOTHROW(require_conforming(SpaceTimeField(g, t), g, t));
}

TEST_CASE("Laplacian of a constant vanishes") {
  for (const Grid& g : {Grid::line(1.0, 16), Grid::rect(1.0, 2.0, 8, 5)}) {
    CHECK(laplacian_neumann(g.constant(3.7), g).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("discrete cosine modes are eigenfields") {
  const Grid g = Grid::line(2.0, 32);
  for (int k = 1; k <= 5; ++k) {
    const Field f = cosine_mode(g, k);
    const Field expected = -eigenvalue_1d(g, k) * f;
    CHECK((laplacian_neumann(f, g) - expected).lpNorm<Eigen::Infinity>() <
          1e-10 * eigenvalue_1d(g, k));
  }
}

TEST_CASE("Laplacian matches a dense assembly") {
  for (const Grid& g : {Grid::line(1.0, 16), Grid::rect(1.0, 1.5, 16, 16)}) {
    const Field f = random_field(g, 3);
    const Field dense = dense_laplacian(g) * f;
    CHECK((laplacian_neumann(f, g) - dense).lpNorm<Eigen::Infinity>() <= 1e-12 * dense.lpNorm<Eigen::Infinity>());
    CHECK((laplacian_matrix(g) * f - dense).lpNorm<Eigen::Infinity>() <= 1e-12 * dense.lpNorm<Eigen::Infinity>());
    const Eigen::MatrixXd A = dense_laplacian(g);
    CHECK((A - A.transpose()).norm() == 0.0);
  }
}

TEST_CASE("discrete divergence theorem") {
  SUBCASE("small grids, unscaled bound") {
    for (const Grid& g : {Grid::line(1.0, 16), Grid::rect(1.0, 1.0, 8, 8)}) {
      for (std::uint64_t s = 0; s < 5; ++s) {
        const Field f = random_field(g, s);
        CHECK(std::abs(mean(laplacian_neumann(f, g), g)) <= 1e-13 * f.lpNorm<Eigen::Infinity>());
      }
    }
  }
  SUBCASE("fine grids, bound relative to the stencil weight") {
    for (const Grid& g : {Grid::line(1.0, 512), Grid::rect(1.0, 1.0, 64, 64)}) {
      const double stencil = 2.0 * g.dim() / (g.hx() * g.hx());
      for (std::uint64_t s = 0; s < 3; ++s) {
        const Field f = random_field(g, s);
        CHECK(std::abs(mean(laplacian_neumann(f, g), g)) <=
              1e-13 * stencil * f.lpNorm<Eigen::Infinity>());
      }
    }
  }
}

TEST_CASE("mean") {
  const Grid g = Grid::rect(1.0, 3.0, 8, 6);
  CHECK(mean(g.constant(-2.5), g) == doctest::Approx(-2.5).epsilon(1e-15));
  const Grid l = Grid::line(1.0, 20);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(mean(cosine_mode(l, k), l)) < 1e-14);
  const Field f = random_field(g, 9);
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < f.size(); ++i) sum += f[i];
  const double direct = static_cast<double>(sum * g.cell_volume() / g.volume());
  CHECK(mean(f, g) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("L2 inner product and norms") {
  const Grid g = Grid::rect(2.0, 1.0, 6, 4);
  CHECK(l2_norm(g.zeros(), g) == 0.0);
  CHECK(l2_norm(g.constant(-3.0), g) == doctest::Approx(3.0 * std::sqrt(g.volume())));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Field a = random_field(g, s);
    const Field b = random_field(g, s + 100);
    CHECK(std::abs(inner(a, b, g)) <= l2_norm(a, g) * l2_norm(b, g));
  }
  CHECK(h1_norm(g.constant(2.0), g) == doctest::Approx(l2_norm(g.constant(2.0), g)));
}

TEST_CASE("inverse Neumann operator") {
  const Grid g = Grid::line(1.0, 48);
  CHECK(inverse_neumann(g.zeros(), g).lpNorm<Eigen::Infinity>() == 0.0);

  SUBCASE("eigenmodes are divided by their eigenvalue") {
    for (int k = 1; k <= 4; ++k) {
      const Field f = cosine_mode(g, k);
      const Field z = inverse_neumann(f, g);
      CHECK((z - f / eigenvalue_1d(g, k)).lpNorm<Eigen::Infinity>() < 1e-10 / eigenvalue_1d(g, k));
    }
  }
  SUBCASE("dense 1D oracle") {
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::MatrixXd M =
        -dense_laplacian(g) + Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const Field psi = random_field(g, s, true);
      const Field oracle = lu.solve(psi);
      const Field z = inverse_neumann(psi, g);
      CHECK((z - oracle).lpNorm<Eigen::Infinity>() <= 1e-10 * oracle.lpNorm<Eigen::Infinity>());
      CHECK(std::abs(mean(z, g)) < 1e-13);
    }
  }
  SUBCASE("self-adjoint and positive") {
    const Grid q = Grid::rect(1.0, 1.0, 12, 10);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const Field psi = random_field(q, s, true);
      const Field zeta = random_field(q, s + 50, true);
      const Field npsi = inverse_neumann(psi, q);
      const Field nzeta = inverse_neumann(zeta, q);
      CHECK(std::abs(inner(psi, nzeta, q) - inner(zeta, npsi, q)) <=
            1e-12 * l2_norm(psi, q) * l2_norm(nzeta, q));
      CHECK(inner(psi, npsi, q) > 0.0);
      CHECK(inner(psi, npsi, q) == doctest::Approx(grad_norm_sq(npsi, q)).epsilon(1e-10));
    }
  }
  SUBCASE("nonzero mean is rejected") {
    CHECK_THROWS_AS(inverse_neumann(g.constant(1.0), g), PreconditionError);
  }
}

TEST_CASE("dual norm") {
  const Grid g = Grid::line(1.0, 40);
  CHECK(dual_norm(g.zeros(), g) == 0.0);
  CHECK(dual_norm(g.constant(-0.7), g) == doctest::Approx(0.7));
  for (int k = 1; k <= 3; ++k) {
    const double amp = 0.3 * k;
    const Field f = amp * cosine_mode(g, k);
    const double expected = amp * l2_norm(cosine_mode(g, k), g) / std::sqrt(eigenvalue_1d(g, k));
    CHECK(dual_norm(f, g) == doctest::Approx(expected).epsilon(1e-9));
  }
  // Norm comparability: on zero-mean fields the constant is 1/sqrt(lambda_1).
  const double c = 1.0 / std::sqrt(eigenvalue_1d(g, 1));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Field psi = random_field(g, s, true);
    CHECK(dual_norm(psi, g) <= c * l2_norm(psi, g) * (1.0 + 1e-10));
  }
}

TEST_CASE("time convolutions") {
  const Grid g = Grid::line(1.0, 4);
  SUBCASE("zero and constant integrands") {
    const TimeGrid t(2.0, 10);
    CHECK(conv_forward(SpaceTimeField(g, t), t).max_abs() == 0.0);
    const auto c = conv_forward(SpaceTimeField(g, t, 1.5), t);
    for (int n = 0; n <= t.steps(); ++n) {
      CHECK(c[static_cast<std::size_t>(n)][0] == doctest::Approx(1.5 * n * t.tau()).epsilon(1e-14));
    }
  }
  SUBCASE("v = t against the closed-form integral") {
    const TimeGrid t(1.0, 100);
    const auto v = SpaceTimeField::sample(g, t, [](double, double, double s) { return s; });
    const double T = t.final_time();
    CHECK(std::abs(conv_forward(v, t).back()[0] - 0.5 * T * T) <= t.tau() * T);
  }
  SUBCASE("telescoping recovers v") {
    const TimeGrid t(0.7, 13);
    const auto v = test::random_space_time(g, t, 4);
    const auto c = conv_forward(v, t);
    CHECK(c[0].lpNorm<Eigen::Infinity>() == 0.0);
    for (std::size_t n = 1; n < v.size(); ++n) {
      CHECK(((c[n] - c[n - 1]) / t.tau() - v[n]).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
  SUBCASE("forward and backward sums differ by the endpoint term") {
    const TimeGrid t(1.0, 9);
    const auto v = test::random_space_time(g, t, 8);
    const auto f = conv_forward(v, t);
    const auto b = conv_backward(v, t);
    CHECK(b.back().lpNorm<Eigen::Infinity>() == 0.0);
    const Field endpoint = t.tau() * (v.back() - v[0]);
    CHECK((f.back() - b[0] - endpoint).lpNorm<Eigen::Infinity>() < 1e-14);
  }
}

TEST_CASE("space-time inner product skips the initial level") {
  const Grid g = Grid::line(1.0, 5);
  const TimeGrid t(2.0, 4);
  SpaceTimeField a(g, t, 1.0);
  a[0].setConstant(100.0);
  CHECK(inner_q(a, a, g, t) == doctest::Approx(g.volume() * t.final_time()));
  CHECK(norm_q(SpaceTimeField(g, t, 3.0), g, t) ==
        doctest::Approx(3.0 * std::sqrt(g.volume() * t.final_time())));
}
