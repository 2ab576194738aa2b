#include <cmath>
#include <random>

#include "doctest.h"
#include "mixident/align.hpp"
#include "mixident/catalog.hpp"
#include "mixident/errors.hpp"
#include "mixident/network.hpp"
#include "mixident/suite.hpp"
#include "test_util.hpp"

using namespace mixident;

namespace {

NetworkSpec random_leaky_net(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    NetworkSpec net;
    Layer l1;
    l1.weights = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
    l1.bias = Vec::NullaryExpr(m, [&](Index) { return gauss(rng); });
    l1.act = Activation::leaky_relu;
    l1.slope = 0.3;
    Layer l2;
    l2.weights = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
    l2.bias = Vec::NullaryExpr(m, [&](Index) { return gauss(rng); });
    l2.act = Activation::identity;
    net.layers = {l1, l2};
    if (condition_number(l1.weights) < 20.0 &&
        condition_number(l2.weights) < 20.0)
      return net;
  }
}

}  // namespace

TEST_CASE("mirrored priors fold onto the same pushforward") {
  auto [pa, pb] = catalog::fold_equal_priors();
  GenerativeModel ma{pa, catalog::abs_value_map(), 0.0};
  GenerativeModel mb{pb, catalog::abs_value_map(), 0.0};
  auto ev = verify_pushforward_equality(ma, mb, 1e-10);
  CHECK(ev.equal);
  CHECK(ev.max_abs_diff < 1e-10);
  CHECK(ev.points_used > 1500);
  CHECK_FALSE(recover_affine_witness(pa, pb, 1e-6).has_value());
}

TEST_CASE("folded decoder pair shares a pushforward without equivalence") {
  auto bumps = catalog::two_bump_prior();
  auto [f, g] = catalog::folded_decoder_pair();
  GenerativeModel mf{bumps, f, 0.0};
  GenerativeModel mg{bumps, g, 0.0};
  auto ev = verify_pushforward_equality(mf, mg, 1e-10);
  CHECK(ev.equal);
  auto [eq, w] = affine_equivalent(mf, mg, 1e-6);
  CHECK_FALSE(eq);
}

TEST_CASE("distinct priors are detected") {
  auto p = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 2.0, 1.0}});
  auto q = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 3.0, 1.0}});
  auto ident = PiecewiseAffineFunction::single_piece(Mat::Identity(1, 1),
                                                     Vec::Zero(1));
  GenerativeModel mp{p, ident, 0.0};
  GenerativeModel mq{q, ident, 0.0};
  auto ev = verify_pushforward_equality(mp, mq, 1e-10);
  CHECK_FALSE(ev.equal);
  CHECK(ev.max_abs_diff > 1e-3);
}

TEST_CASE("atoms are compared by mass") {
  // A folded-constant region creates an atom in the pushforward.
  auto relu = single_layer_decoder({1, 0}, {1, 0}, {0, 0});
  auto p = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 2.0, 1.0}});
  GenerativeModel m1{p, relu, 0.0};
  GenerativeModel m2{p, relu, 0.0};
  auto ev = verify_pushforward_equality(m1, m2, 1e-10);
  CHECK(ev.equal);
  CHECK(ev.note.find("atoms") != std::string::npos);

  // Shifting the prior moves mass across the fold: same atom location,
  // different atom mass.
  auto q = make_gmm_1d({{0.5, -2.0, 1.0}, {0.5, 2.0, 1.0}});
  GenerativeModel m3{q, relu, 0.0};
  auto ev2 = verify_pushforward_equality(m1, m3, 1e-10);
  CHECK_FALSE(ev2.equal);
}

TEST_CASE("witness recovery round trips") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 8; ++t) {
    int m = t % 2 + 1;
    auto p = testutil::random_gmm(m, t % 3 + 1, rng);
    auto h = testutil::random_invertible_affine(m, rng);
    auto q = affine_pushforward(p, h);
    auto w = recover_affine_witness(p, q, 1e-8);
    REQUIRE(w.has_value());
    // Witness correctness: the recovered map carries p onto q.
    CHECK(delta_l2(affine_pushforward(p, *w), q) < 1e-6);
  }

  auto p = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 2.0, 1.0}});
  auto q3 = make_gmm_1d({{0.4, -1.0, 1.0}, {0.3, 2.0, 1.0}, {0.3, 5.0, 1.0}});
  CHECK_FALSE(recover_affine_witness(p, q3, 1e-6).has_value());
}

TEST_CASE("symmetric mixtures admit multiple witnesses") {
  auto p = catalog::two_bump_prior();
  auto witnesses = all_affine_witnesses(p, p, 1e-9);
  CHECK(witnesses.size() >= 2);  // identity and the mirror map
  bool has_mirror = false;
  for (const auto& w : witnesses)
    if (std::abs(w.matrix(0, 0) + 1.0) < 1e-9) has_mirror = true;
  CHECK(has_mirror);
}

TEST_CASE("npmix theorem verification") {
  std::mt19937_64 rng(23);
  int trials = 12;
  for (int t = 0; t < trials; ++t) {
    int m = t % 2 + 1;
    auto prior = testutil::random_gmm(m, t % 2 + 2, rng);
    auto decoder = compile_network(random_leaky_net(m, rng));
    auto h = testutil::random_invertible_affine(m, rng);
    GenerativeModel m1{prior, decoder, 0.0};
    GenerativeModel m2{affine_pushforward(prior, h),
                       precompose(decoder, h.inverse()), 0.0};
    CHECK(verify_npmix_theorem(m1, m2));
  }

  // Distinct pushforwards satisfy the statement through the first clause.
  auto p = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 2.0, 1.0}});
  auto q = make_gmm_1d({{0.5, -1.0, 1.0}, {0.5, 4.0, 1.0}});
  auto ident = PiecewiseAffineFunction::single_piece(Mat::Identity(1, 1),
                                                     Vec::Zero(1));
  CHECK(verify_npmix_theorem({p, ident, 0.0}, {q, ident, 0.0}));

  // The folding counterexample violates the prerequisite.
  auto [pa, pb] = catalog::fold_equal_priors();
  GenerativeModel ma{pa, catalog::abs_value_map(), 0.0};
  GenerativeModel mb{pb, catalog::abs_value_map(), 0.0};
  CHECK_THROWS_AS(verify_npmix_theorem(ma, mb), PrerequisiteViolated);
}

TEST_CASE("end-to-end recovery") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 5; ++t) {
    auto z = testutil::random_factorial_gmm(2, 3, rng);
    auto net = random_leaky_net(2, rng);
    REQUIRE(architecture_check(net).level == InjectivityLevel::injective);
    auto decoder = compile_network(net);
    auto warp = testutil::random_invertible_affine(2, rng, 50.0);
    GenerativeModel observed{affine_pushforward(z, warp),
                             precompose(decoder, warp.inverse()), 0.0};
    auto [recovered, report] = end_to_end_recovery(observed);
    CHECK(report.ratio_ok);
    CHECK(testutil::canonical_factorial_diff(recovered, z) < 1e-4);
  }

  // Identity decoder: the pipeline reduces to plain latent recovery.
  auto z = testutil::random_factorial_gmm(2, 2, rng);
  GenerativeModel ident_model{
      z, PiecewiseAffineFunction::single_piece(Mat::Identity(2, 2), Vec::Zero(2)),
      0.0};
  auto [rec, report] = end_to_end_recovery(ident_model);
  auto [direct, unmix] = recover_latent(z);
  (void)unmix;
  REQUIRE(rec.size() == direct.size());
  for (int j = 0; j < rec.size(); ++j) {
    CHECK((rec.component(j).mean - direct.component(j).mean).norm() < 1e-12);
    CHECK((rec.component(j).cov - direct.component(j).cov).norm() < 1e-12);
  }

  // A prior with tied variance ratios halts at the unmixing stage.
  GaussianComponent c1{0.5, Vec::Zero(2), Mat::Identity(2, 2)};
  GaussianComponent c2{0.5, 3.0 * Vec::Ones(2), Mat::Identity(2, 2)};
  GenerativeModel bad{make_gmm({c1, c2}),
                      PiecewiseAffineFunction::single_piece(Mat::Identity(2, 2),
                                                            Vec::Zero(2)),
                      0.0};
  CHECK_THROWS_WITH_AS(end_to_end_recovery(bad),
                       doctest::Contains("stage=unmixing"), AssumptionViolated);
}

TEST_CASE("end-to-end recovery reports structure checks") {
  std::mt19937_64 rng(41);
  auto z = testutil::random_factorial_gmm(2, 4, rng);
  GenerativeModel model{
      z, PiecewiseAffineFunction::single_piece(Mat::Identity(2, 2), Vec::Zero(2)),
      0.0};
  LatentStructure s;
  s.k = 2;
  s.domain_sizes = {2, 2};
  s.joint_weights = {0.25, 0.25, 0.25, 0.25};
  s.component_index = {0, 1, 2, 3};
  s.neighborhoods = {{0}, {1}};
  auto [rec, report] = end_to_end_recovery(model, s);
  (void)rec;
  REQUIRE(report.subset_ok.has_value());
  CHECK(*report.subset_ok);
  CHECK(report.positivity == "holds");
  CHECK(report.nondegeneracy.substr(0, 9) == "unchecked");
}
