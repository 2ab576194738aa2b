#include <cmath>
#include <random>

#include "doctest.h"
#include "mixident/errors.hpp"
#include "mixident/gmm.hpp"
#include "test_util.hpp"

using namespace mixident;

namespace {

GaussianMixture standard_normal_1d() { return make_gmm_1d({{1.0, 0.0, 1.0}}); }

// 1/3 N(-2,s^2) + 1/3 N(-1,s^2) + 1/3 N(3,s^2)
GaussianMixture three_component_mixture(double sigma = 1.0) {
  double v = sigma * sigma;
  return make_gmm_1d({{1.0 / 3, -2.0, v}, {1.0 / 3, -1.0, v}, {1.0 / 3, 3.0, v}});
}

}  // namespace

TEST_CASE("make_gmm basic construction and reduction") {
  auto single = standard_normal_1d();
  CHECK(single.size() == 1);
  CHECK(single.dim() == 1);

  auto mix = three_component_mixture();
  CHECK(mix.size() == 3);

  auto merged = make_gmm_1d({{0.5, 0.0, 1.0}, {0.5, 0.0, 1.0}});
  CHECK(merged.size() == 1);
  CHECK(merged.component(0).weight == doctest::Approx(1.0));
}

TEST_CASE("make_gmm renormalizes near-one weight sums") {
  auto g = make_gmm_1d({{0.5 + 4e-10, 0.0, 1.0}, {0.5, 2.0, 1.0}});
  double sum = 0.0;
  for (const auto& c : g.components()) sum += c.weight;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("make_gmm error paths") {
  CHECK_THROWS_AS(make_gmm_1d({{-0.5, 0.0, 1.0}, {1.5, 1.0, 1.0}}),
                  NonPositiveWeight);
  CHECK_THROWS_AS(make_gmm_1d({{1.0, 0.0, 0.0}}), DegenerateCovariance);
  CHECK_THROWS_AS(make_gmm_1d({{0.3, 0.0, 1.0}, {0.3, 1.0, 1.0}}),
                  NonPositiveWeight);  // weights sum to 0.6

  GaussianComponent a{0.5, Vec::Zero(2), Mat::Identity(2, 2)};
  GaussianComponent b{0.5, Vec::Zero(3), Mat::Identity(3, 3)};
  CHECK_THROWS_AS(make_gmm({a, b}), DimensionMismatch);
}

TEST_CASE("density matches hand values") {
  auto single = standard_normal_1d();
  CHECK(single.density(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));

  // At x = 0 the three-component mixture sums phi(2), phi(1), phi(3).
  auto mix = three_component_mixture();
  double expect = (normal_pdf(2.0) + normal_pdf(1.0) + normal_pdf(3.0)) / 3.0;
  CHECK(mix.density(0.0) == doctest::Approx(expect).epsilon(1e-14));

  GaussianComponent iso{1.0, Vec::Zero(2), Mat::Identity(2, 2)};
  auto g2 = make_gmm({iso});
  CHECK(g2.density(Vec::Zero(2)) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));

  CHECK_THROWS_AS(g2.density(Vec::Zero(3)), DimensionMismatch);
}

TEST_CASE("density integrates to one over the envelope") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    auto p = testutil::random_gmm(trial % 2 + 1, trial % 3 + 1, rng);
    double mass = testutil::quad_total_mass(p);
    CHECK(mass > 1.0 - 1e-6);
    CHECK(mass < 1.0 + 1e-10);
  }
}

TEST_CASE("sampling is deterministic and matches moments") {
  auto single = standard_normal_1d();
  Mat a = single.sample(1, 42);
  Mat b = single.sample(1, 42);
  CHECK(a(0, 0) == b(0, 0));

  // CLT bound 3/sqrt(n) < 0.01; spec budget is 0.02.
  Mat big = single.sample(100000, 7);
  CHECK(std::abs(big.col(0).mean()) < 0.02);

  // Mixture mean (-2 - 1 + 3)/3 = 0.
  auto mix = three_component_mixture();
  Mat ms = mix.sample(100000, 7);
  CHECK(std::abs(ms.col(0).mean()) < 0.03);
}

TEST_CASE("affine pushforward closed form") {
  auto single = standard_normal_1d();
  auto pushed = affine_pushforward(single, AffineMap::scalar(2.0, 1.0));
  CHECK(pushed.component(0).mean(0) == doctest::Approx(1.0));
  CHECK(pushed.component(0).cov(0, 0) == doctest::Approx(4.0));

  std::mt19937_64 rng(3);
  auto any = testutil::random_gmm(2, 3, rng);
  auto same = affine_pushforward(any, AffineMap::identity(2));
  REQUIRE(same.size() == any.size());
  for (int j = 0; j < any.size(); ++j) {
    CHECK((same.component(j).mean - any.component(j).mean).norm() < 1e-14);
    CHECK((same.component(j).cov - any.component(j).cov).norm() < 1e-14);
  }

  GaussianComponent iso{1.0, Vec::Zero(2), Mat::Identity(2, 2)};
  Mat shear(2, 2);
  shear << 1, 1, 0, 1;
  auto sheared = affine_pushforward(make_gmm({iso}), AffineMap(shear, Vec::Zero(2)));
  Mat expect(2, 2);
  expect << 2, 1, 1, 1;
  CHECK((sheared.component(0).cov - expect).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("pushforward rejects rank-deficient maps") {
  GaussianComponent iso{1.0, Vec::Zero(2), Mat::Identity(2, 2)};
  Mat a(2, 2);
  a << 1, 1, 1, 1;
  CHECK_THROWS_AS(affine_pushforward(make_gmm({iso}), AffineMap(a, Vec::Zero(2))),
                  DegenerateCovariance);
}

TEST_CASE("pushforward density change of variables") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    int m = trial % 2 + 1;
    auto p = testutil::random_gmm(m, 3, rng);
    auto h = testutil::random_invertible_affine(m, rng);
    auto pushed = affine_pushforward(p, h);
    double det = std::abs(h.matrix.determinant());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      Vec x = Vec::NullaryExpr(m, [&](Index) { return 2.0 * gauss(rng); });
      CHECK(pushed.density(h(x)) * det ==
            doctest::Approx(p.density(x)).epsilon(1e-9));
    }
  }
}

TEST_CASE("l2 inner product closed form vs quadrature") {
  auto single = standard_normal_1d();
  CHECK(l2_inner(single, single) ==
        doctest::Approx(1.0 / (2.0 * std::sqrt(M_PI))).epsilon(1e-13));

  auto mix = three_component_mixture();
  double closed = l2_inner(mix, mix);
  double quad = testutil::quad_l2_inner(mix, mix);
  CHECK(std::abs(closed - quad) < 1e-9);

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    int m = trial % 2 + 1;
    auto p = testutil::random_gmm(m, trial % 4 + 1, rng);
    auto q = testutil::random_gmm(m, (trial + 1) % 4 + 1, rng);
    CHECK(l2_inner(p, q) == doctest::Approx(l2_inner(q, p)).epsilon(1e-14));
    CHECK(std::abs(l2_inner(p, q) - testutil::quad_l2_inner(p, q)) < 1e-8);
    // Cauchy-Schwarz
    CHECK(l2_inner(p, q) * l2_inner(p, q) <=
          l2_inner(p, p) * l2_inner(q, q) * (1.0 + 1e-12));
  }

  GaussianComponent iso2{1.0, Vec::Zero(2), Mat::Identity(2, 2)};
  CHECK_THROWS_AS(l2_inner(single, make_gmm({iso2})), DimensionMismatch);
}
