#include <cmath>

#include "doctest.h"
#include "mixident/linalg.hpp"
#include "mixident/lp.hpp"
#include "mixident/quadrature.hpp"

using namespace mixident;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  // A rule with n nodes is exact through degree 2n-1.
  auto poly = [](double x) { return 5.0 * x * x * x * x - x * x + 3.0; };
  double got = quadrature::integrate_1d(poly, -1.0, 2.0, 1, 8);
  double expect = (std::pow(2.0, 5) - std::pow(-1.0, 5)) -
                  (std::pow(2.0, 3) - std::pow(-1.0, 3)) / 3.0 + 3.0 * 3.0;
  CHECK(got == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("composite rule handles gaussian mass") {
  auto f = [](double x) { return normal_pdf(x); };
  double got = quadrature::integrate_1d(f, -8.0, 8.0, 16, 64);
  CHECK(std::abs(got - 1.0) < 1e-12);
}

TEST_CASE("2-d tensor rule integrates isotropic gaussian") {
  auto f = [](const Vec& x) {
    return std::exp(-0.5 * x.squaredNorm()) / (2.0 * M_PI);
  };
  Vec lo = Vec::Constant(2, -8.0), hi = Vec::Constant(2, 8.0);
  double got = quadrature::integrate_2d(f, lo, hi, 8, 32);
  CHECK(std::abs(got - 1.0) < 1e-10);
}

TEST_CASE("psd_sqrt squares back") {
  Mat s(2, 2);
  s << 4.0, 1.0, 1.0, 3.0;
  Mat r = psd_sqrt(s);
  CHECK((r * r - s).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((r - r.transpose()).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("lp maximize on a box") {
  // max x + y over [0,1]^2 -> 2 at (1,1)
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec b(4);
  b << 1, 0, 1, 0;
  Vec c(2);
  c << 1, 1;
  auto sol = lp::maximize(c, A, b);
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.objective == doctest::Approx(2.0));
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.x(1) == doctest::Approx(1.0));
}

TEST_CASE("lp detects infeasibility and unboundedness") {
  Mat A(2, 1);
  A << 1, -1;
  Vec b(2);
  b << -1, -1;  // x <= -1 and x >= 1
  Vec c(1);
  c << 1;
  CHECK(lp::maximize(c, A, b).status == lp::Status::infeasible);

  Mat A2(1, 1);
  A2 << -1;  // x >= -3
  Vec b2(1);
  b2 << 3;
  CHECK(lp::maximize(c, A2, b2).status == lp::Status::unbounded);
}

TEST_CASE("lp with negative rhs goes through phase 1") {
  // Feasible set {x >= 2, x <= 5}: max -x -> -2 at x = 2.
  Mat A(2, 1);
  A << -1, 1;
  Vec b(2);
  b << -2, 5;
  Vec c(1);
  c << -1;
  auto sol = lp::maximize(c, A, b);
  REQUIRE(sol.status == lp::Status::optimal);
  CHECK(sol.x(0) == doctest::Approx(2.0));
}

TEST_CASE("chebyshev ball of the unit square") {
  Mat C(4, 2);
  C << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec d(4);
  d << 1, 1, 1, 1;
  auto ball = lp::chebyshev_ball(C, d);
  REQUIRE(ball.feasible);
  CHECK(ball.radius == doctest::Approx(1.0));
  CHECK(ball.center.lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("chebyshev ball reports empty interior") {
  // x <= 0 and x >= 0: a single point, zero radius.
  Mat C(2, 1);
  C << 1, -1;
  Vec d(2);
  d << 0, 0;
  auto ball = lp::chebyshev_ball(C, d);
  REQUIRE(ball.feasible);
  CHECK(ball.radius == doctest::Approx(0.0).epsilon(1e-9));

  Vec d2(2);
  d2 << -1, -1;  // empty
  CHECK_FALSE(lp::chebyshev_ball(C, d2).feasible);
}

TEST_CASE("chebyshev ball caps unbounded regions") {
  Mat C(1, 1);
  C << 1;  // x <= 0, unbounded below
  Vec d(1);
  d << 0;
  auto ball = lp::chebyshev_ball(C, d, 1e6);
  REQUIRE(ball.feasible);
  CHECK(ball.radius == doctest::Approx(1e6));
}
