#include <cmath>
#include <random>

#include "doctest.h"
#include "mixident/disentangle.hpp"
#include "mixident/errors.hpp"
#include "test_util.hpp"

using namespace mixident;

namespace {

GaussianMixture diag_gmm(const std::vector<double>& weights,
                         const std::vector<Vec>& means,
                         const std::vector<Vec>& vars) {
  std::vector<GaussianComponent> comps;
  for (size_t j = 0; j < weights.size(); ++j)
    comps.push_back({weights[j], means[j], Mat(vars[j].asDiagonal())});
  return make_gmm(std::move(comps));
}

GaussianMixture random_factorial(int m, int k, std::mt19937_64& rng,
                                 double min_margin = 0.2) {
  return testutil::random_factorial_gmm(m, k, rng, min_margin);
}

double canonical_diff(const GaussianMixture& a, const GaussianMixture& b) {
  return testutil::canonical_factorial_diff(a, b);
}

}  // namespace

TEST_CASE("ratio assumption margins") {
  auto g = diag_gmm({0.5, 0.5}, {Vec::Zero(2), Vec::Ones(2)},
                    {(Vec(2) << 1.0, 4.0).finished(),
                     (Vec(2) << 9.0, 1.0).finished()});
  auto [pair, margin] = check_ratio_assumption(g);
  CHECK(pair.first == 0);
  CHECK(pair.second == 1);
  CHECK(margin == doctest::Approx(4.0 - 1.0 / 9.0));

  auto iso = diag_gmm({0.5, 0.5}, {Vec::Zero(2), Vec::Ones(2)},
                      {Vec::Ones(2), Vec::Ones(2)});
  CHECK_THROWS_AS(check_ratio_assumption(iso), NoValidPair);

  auto one_d = make_gmm_1d({{0.5, 0.0, 1.0}, {0.5, 1.0, 2.0}});
  auto [p1, m1] = check_ratio_assumption(one_d);
  (void)p1;
  CHECK(std::isinf(m1));

  GaussianComponent skew{0.5, Vec::Zero(2),
                         (Mat(2, 2) << 1.0, 0.5, 0.5, 1.0).finished()};
  GaussianComponent diag{0.5, Vec::Ones(2), Mat::Identity(2, 2)};
  CHECK_THROWS_AS(check_ratio_assumption(make_gmm({skew, diag})),
                  NotConditionallyFactorial);
}

TEST_CASE("unmixing with identity mixing") {
  auto z = diag_gmm({0.5, 0.5}, {Vec::Zero(2), Vec::Ones(2)},
                    {(Vec(2) << 1.0, 4.0).finished(),
                     (Vec(2) << 9.0, 1.0).finished()});
  auto result = recover_unmixing(z, 0, 1);
  attach_ground_truth(result, Mat::Identity(2, 2));
  CHECK(*result.residual < 1e-8);
  CHECK(result.scaling->minCoeff() > 0.0);
}

TEST_CASE("unmixing under random mixing matrices") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    int m = trial % 2 + 2;
    int k = trial % 3 + 2;
    auto z = random_factorial(m, k, rng);
    auto mix = testutil::random_invertible_affine(m, rng, 50.0);
    auto observed = affine_pushforward(z, mix);
    auto [pair, margin] = check_ratio_assumption(z);
    (void)margin;
    auto result = recover_unmixing(observed, pair.first, pair.second);
    attach_ground_truth(result, mix.matrix);
    CHECK(*result.residual < 1e-6);
    CHECK(result.scaling->minCoeff() > 0.0);
  }
}

TEST_CASE("repeated singular values are rejected") {
  auto iso = diag_gmm({0.5, 0.5}, {Vec::Zero(2), Vec::Ones(2)},
                      {Vec::Ones(2), Vec::Ones(2)});
  CHECK_THROWS_AS(recover_unmixing(iso, 0, 1), RepeatedSingularValues);
}

TEST_CASE("post-hoc diagonality check fires") {
  Mat rot(2, 2);
  double a = M_PI / 4.0;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  GaussianComponent c1{1.0 / 3, Vec::Zero(2),
                       (Vec(2) << 1.0, 2.0).finished().asDiagonal()};
  GaussianComponent c2{1.0 / 3, Vec::Ones(2),
                       (Vec(2) << 4.0, 1.0).finished().asDiagonal()};
  GaussianComponent c3{1.0 / 3, 2.0 * Vec::Ones(2),
                       rot * (Vec(2) << 3.0, 0.5).finished().asDiagonal() *
                           rot.transpose()};
  auto observed = make_gmm({c1, c2, c3});
  CHECK_THROWS_AS(recover_unmixing(observed, 0, 1), AssumptionViolated);
}

TEST_CASE("latent recovery round trip") {
  std::mt19937_64 rng(57);

  // Already factorial: recovery is the identity up to permutation/scaling.
  auto z0 = random_factorial(2, 3, rng);
  auto [rec0, un0] = recover_latent(z0);
  for (const auto& comp : rec0.components())
    for (Index p = 0; p < 2; ++p)
      for (Index q = 0; q < 2; ++q)
        if (p != q) CHECK(comp.cov(p, q) == 0.0);
  CHECK(canonical_diff(rec0, z0) < 1e-8);

  for (int trial = 0; trial < 6; ++trial) {
    auto z = random_factorial(2, 3, rng);
    auto mix = testutil::random_invertible_affine(2, rng, 50.0);
    auto observed = affine_pushforward(z, mix);
    auto [rec, un] = recover_latent(observed);
    (void)un;
    CHECK(canonical_diff(rec, z) < 1e-5);
  }
}

TEST_CASE("latent recovery detects non-factorial structure") {
  // Any two SPD covariances share a diagonalizing basis, so breaking common
  // diagonalizability takes a third component.
  Mat rot(2, 2);
  double a = 0.6;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  GaussianComponent c1{1.0 / 3, Vec::Zero(2),
                       (Vec(2) << 1.0, 3.0).finished().asDiagonal()};
  GaussianComponent c2{1.0 / 3, Vec::Ones(2),
                       (Vec(2) << 5.0, 1.0).finished().asDiagonal()};
  GaussianComponent c3{1.0 / 3, 2.0 * Vec::Ones(2),
                       rot * (Vec(2) << 4.0, 0.5).finished().asDiagonal() *
                           rot.transpose()};
  auto observed = make_gmm({c1, c2, c3});
  CHECK_THROWS_AS(recover_latent(observed), AssumptionViolated);
}

TEST_CASE("recovery is scale equivariant and deterministic") {
  std::mt19937_64 rng(71);
  auto z = random_factorial(2, 3, rng);
  auto mix = testutil::random_invertible_affine(2, rng, 50.0);
  auto observed = affine_pushforward(z, mix);

  auto [rec1, un1] = recover_latent(observed);
  auto [rec2, un2] = recover_latent(observed);
  CHECK((un1.unmixing - un2.unmixing).norm() == 0.0);

  auto scaled = affine_pushforward(
      observed, AffineMap(3.0 * Mat::Identity(2, 2), Vec::Zero(2)));
  auto [rec3, un3] = recover_latent(scaled);
  CHECK(un3.pair_i1 == un1.pair_i1);
  CHECK(un3.pair_i2 == un1.pair_i2);
  CHECK(canonical_diff(rec3, rec1) < 1e-7);
}

TEST_CASE("subset condition") {
  LatentStructure s;
  s.k = 2;
  s.domain_sizes = {2, 2};
  s.joint_weights = {0.25, 0.25, 0.25, 0.25};
  s.component_index = {0, 1, 2, 3};
  s.neighborhoods = {{0, 1}, {1, 2}};
  CHECK(check_subset_condition(s));

  s.neighborhoods = {{0}, {0, 1}};
  CHECK_FALSE(check_subset_condition(s));

  LatentStructure single;
  single.k = 1;
  single.domain_sizes = {3};
  single.joint_weights = {0.2, 0.3, 0.5};
  single.component_index = {0, 1, 2};
  single.neighborhoods = {{0, 1}};
  CHECK(check_subset_condition(single));
}

TEST_CASE("latent structure validation") {
  LatentStructure s;
  s.k = 2;
  s.domain_sizes = {2, 2};
  s.joint_weights = {0.5, 0.5, 0.0, 0.0};  // zero weights forbidden
  s.component_index = {0, 1, 2, 3};
  s.neighborhoods = {{0}, {1}};
  CHECK_THROWS_AS(s.validate(), NonPositiveWeight);

  s.joint_weights = {0.25, 0.25, 0.25, 0.25};
  s.component_index = {0, 1, 2, 2};
  CHECK_THROWS_AS(s.validate(), InvalidArgument);

  s.component_index = {0, 1, 2, 3};
  CHECK_NOTHROW(s.validate(4));
  CHECK_THROWS_AS(s.validate(3), DimensionMismatch);
}
