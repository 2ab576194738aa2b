#include <cmath>
#include <random>

#include "doctest.h"
#include "mixident/catalog.hpp"
#include "mixident/errors.hpp"
#include "mixident/injectivity.hpp"
#include "mixident/network.hpp"
#include "mixident/pwa.hpp"
#include "test_util.hpp"

using namespace mixident;

namespace {

NetworkSpec relu_unit() {
  NetworkSpec net;
  Layer l1{Mat::Constant(1, 1, 1.0), Vec::Zero(1), Activation::relu, 0.01};
  Layer l2{Mat::Constant(1, 1, 1.0), Vec::Zero(1), Activation::identity, 0.01};
  net.layers = {l1, l2};
  return net;
}

NetworkSpec random_net(const std::vector<int>& widths, Activation act,
                       std::mt19937_64& rng, double slope = 0.2) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  NetworkSpec net;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    Layer l;
    l.weights = Mat::NullaryExpr(widths[i + 1], widths[i],
                                 [&](Index, Index) { return gauss(rng); });
    l.bias = Vec::NullaryExpr(widths[i + 1], [&](Index) { return gauss(rng); });
    l.act = i + 2 == widths.size() ? Activation::identity : act;
    l.slope = slope;
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace

TEST_CASE("compile single relu unit") {
  auto f = compile_network(relu_unit());
  CHECK(f.piece_count() == 2);
  CHECK(f.evaluate(-1.5) == doctest::Approx(0.0));
  CHECK(f.evaluate(2.0) == doctest::Approx(2.0));
  CHECK(f.evaluate(0.0) == doctest::Approx(0.0));
}

TEST_CASE("compile identity network") {
  NetworkSpec net;
  net.layers = {Layer{Mat::Identity(2, 2), Vec::Zero(2), Activation::identity, 0.01}};
  auto f = compile_network(net);
  CHECK(f.piece_count() == 1);
  CHECK((f.piece(0).matrix - Mat::Identity(2, 2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("half-abs network compiles to |x|/2") {
  auto f = compile_network(catalog::half_abs_network());
  for (double x : {-2.0, -1.0, 1.0, 2.0})
    CHECK(f.evaluate(x) == doctest::Approx(std::abs(x) / 2.0).epsilon(1e-14));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    double x = unif(rng);
    CHECK(std::abs(f.evaluate(x) - std::abs(x) / 2.0) < 1e-12);
  }
}

TEST_CASE("folded decoder evaluates per its pieces") {
  auto [f, g] = catalog::folded_decoder_pair();
  CHECK(f.evaluate(3.0) == doctest::Approx(-1.0));
  CHECK(f.evaluate(-3.0) == doctest::Approx(1.0));
  CHECK(f.evaluate(-5.0) == doctest::Approx(-0.2));
  CHECK(g.evaluate(3.0) == doctest::Approx(1.0));
  CHECK(g.evaluate(0.5) == doctest::Approx(0.5));
}

TEST_CASE("compile matches forward evaluation on random networks") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    auto act = trial % 2 == 0 ? Activation::relu : Activation::leaky_relu;
    auto net = random_net({2, 3, 3, 2}, act, rng);
    auto f = compile_network(net);
    for (int i = 0; i < 1000; ++i) {
      Vec z = Vec::NullaryExpr(2, [&](Index) { return 3.0 * gauss(rng); });
      CHECK((f.evaluate(z) - forward(net, z)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    CHECK(facet_agreement_max_diff(f, 100, 7) < 1e-9);
    CHECK(cover_violation(f, 2000, 10.0, 8) < 1e-12);
  }
}

TEST_CASE("compile enforces caps") {
  std::mt19937_64 rng(1);
  auto net = random_net({2, 30, 2}, Activation::relu, rng);
  CHECK_THROWS_AS(compile_network(net), InvalidArgument);
  auto small = random_net({2, 6, 2}, Activation::relu, rng);
  CHECK_THROWS_AS(compile_network(small, 3), RegionCapExceeded);
}

TEST_CASE("preimage enumeration") {
  auto relu = compile_network(relu_unit());
  auto pre2 = relu.preimage(Vec::Constant(1, 2.0));
  REQUIRE(pre2.points.size() == 1);
  CHECK(pre2.points[0](0) == doctest::Approx(2.0));
  CHECK_FALSE(pre2.infinite);

  auto abs_f = catalog::abs_value_map();
  auto pre1 = abs_f.preimage(Vec::Constant(1, 1.0));
  REQUIRE(pre1.points.size() == 2);
  CHECK(std::abs(pre1.points[0](0)) == doctest::Approx(1.0));
  CHECK(std::abs(pre1.points[1](0)) == doctest::Approx(1.0));
  CHECK(pre1.points[0](0) * pre1.points[1](0) < 0.0);

  // The constant piece of ReLU makes the preimage of 0 a ray.
  auto pre0 = relu.preimage(Vec::Constant(1, 0.0));
  CHECK(pre0.infinite);

  auto none = abs_f.preimage(Vec::Constant(1, -1.0));
  CHECK(none.points.empty());
  CHECK_FALSE(none.infinite);
}

TEST_CASE("genericity detection") {
  auto relu = compile_network(relu_unit());
  CHECK_FALSE(relu.is_generic(Vec::Constant(1, 0.0)));
  CHECK(relu.is_generic(Vec::Constant(1, 1.0)));
  auto abs_f = catalog::abs_value_map();
  CHECK_FALSE(abs_f.is_generic(Vec::Constant(1, 0.0)));
  CHECK(abs_f.is_generic(Vec::Constant(1, 0.5)));
}

TEST_CASE("preimage count via analytic continuation") {
  auto prior = make_gmm_1d({{1.0, 0.0, 1.0}});

  auto affine = PiecewiseAffineFunction::single_piece(Mat::Constant(1, 1, 2.0),
                                                      Vec::Constant(1, 1.0));
  CHECK(preimage_count_ext(affine, prior, Vec::Constant(1, 0.3), 0.5) == 1);

  auto abs_f = catalog::abs_value_map();
  CHECK(preimage_count_ext(abs_f, prior, Vec::Constant(1, 1.0), 0.25) == 2);
  CHECK_THROWS_AS(preimage_count_ext(abs_f, prior, Vec::Constant(1, 0.0), 0.25),
                  NotGenericPoint);

  auto [f, g] = catalog::folded_decoder_pair();
  auto bumps = catalog::two_bump_prior();
  CHECK(preimage_count_ext(f, bumps, Vec::Constant(1, -1.5), 0.2) == 3);

  // Equals direct enumeration on a generic grid.
  for (int i = 0; i <= 100; ++i) {
    Vec x = Vec::Constant(1, -2.9 + 5.8 * i / 100.0);
    if (!f.is_generic(x)) continue;
    auto direct = f.preimage(x);
    CHECK(preimage_count_ext(f, bumps, x, 0.05) ==
          static_cast<int>(direct.points.size()));
  }
}

TEST_CASE("1-d injectivity classification") {
  auto relu = compile_network(relu_unit());
  auto v1 = classify_injectivity(relu);
  CHECK(v1.level == InjectivityLevel::observably_injective);
  CHECK(v1.method == "exact_1d");

  auto abs_f = catalog::abs_value_map();
  auto v2 = classify_injectivity(abs_f);
  CHECK(v2.level == InjectivityLevel::not_weakly_injective);
  REQUIRE(v2.witness.has_value());
  auto [z1, z2] = *v2.witness;
  CHECK((z1 - z2).lpNorm<Eigen::Infinity>() > 1e-8);
  CHECK(std::abs(abs_f.evaluate(z1(0)) - abs_f.evaluate(z2(0))) < 1e-10);

  auto [f, g] = catalog::folded_decoder_pair();
  CHECK(classify_injectivity(f).level == InjectivityLevel::weakly_injective);

  auto ident = PiecewiseAffineFunction::single_piece(Mat::Identity(1, 1),
                                                     Vec::Zero(1));
  CHECK(classify_injectivity(ident).level == InjectivityLevel::injective);

  auto half_abs = compile_network(catalog::half_abs_network());
  auto v3 = classify_injectivity(half_abs);
  CHECK(v3.level == InjectivityLevel::not_weakly_injective);
  REQUIRE(v3.witness.has_value());

  auto zero = PiecewiseAffineFunction::single_piece(Mat::Zero(1, 1), Vec::Zero(1));
  CHECK(classify_injectivity(zero).level ==
        InjectivityLevel::not_weakly_injective);
}

TEST_CASE("2-d injectivity classification") {
  std::mt19937_64 rng(4);
  auto leaky = random_net({2, 2, 2}, Activation::leaky_relu, rng);
  auto f = compile_network(leaky);
  auto v = classify_injectivity(f);
  CHECK(v.level == InjectivityLevel::injective);
  CHECK(v.method == "exact_pairwise");

  // (x, y) -> (|x|, y): a full fold, not weakly injective.
  std::vector<AffinePiece> pieces;
  AffinePiece left;
  left.region = Region(2);
  left.region.add((Vec(2) << 1.0, 0.0).finished(), 0.0);
  left.matrix = (Mat(2, 2) << -1, 0, 0, 1).finished();
  left.offset = Vec::Zero(2);
  AffinePiece right;
  right.region = Region(2);
  right.region.add((Vec(2) << -1.0, 0.0).finished(), 0.0);
  right.matrix = Mat::Identity(2, 2);
  right.offset = Vec::Zero(2);
  pieces = {left, right};
  auto fold = PiecewiseAffineFunction(pieces, 2, 2);
  auto vf = classify_injectivity(fold);
  CHECK(vf.level == InjectivityLevel::not_weakly_injective);
  REQUIRE(vf.witness.has_value());
  CHECK((fold.evaluate(vf.witness->first) - fold.evaluate(vf.witness->second))
            .lpNorm<Eigen::Infinity>() < 1e-10);

  // (x, y) -> (relu(x), y): collisions confined to a measure-zero boundary.
  AffinePiece dead;
  dead.region = left.region;
  dead.matrix = (Mat(2, 2) << 0, 0, 0, 1).finished();
  dead.offset = Vec::Zero(2);
  auto ramp = PiecewiseAffineFunction({dead, right}, 2, 2);
  CHECK(classify_injectivity(ramp).level ==
        InjectivityLevel::observably_injective);
}

TEST_CASE("verdicts are deterministic across seeds for exact methods") {
  auto [f, g] = catalog::folded_decoder_pair();
  auto a = classify_injectivity(f, 512, 1);
  auto b = classify_injectivity(f, 2048, 99);
  CHECK(a.level == b.level);
}

TEST_CASE("architecture static conditions") {
  std::mt19937_64 rng(21);
  auto leaky = random_net({2, 4, 4}, Activation::leaky_relu, rng);
  auto v1 = architecture_check(leaky);
  CHECK(v1.level == InjectivityLevel::injective);
  CHECK(v1.method == "static");

  auto relu = random_net({2, 3, 4}, Activation::relu, rng);
  CHECK(architecture_check(relu).level ==
        InjectivityLevel::observably_injective);

  CHECK(architecture_check(catalog::half_abs_network()).level ==
        InjectivityLevel::unknown);

  // Width decrease disables the static check.
  auto narrow = random_net({3, 4, 2}, Activation::leaky_relu, rng);
  CHECK(architecture_check(narrow).level == InjectivityLevel::unknown);

  // Rank-deficient weights disable it too.
  NetworkSpec bad;
  Layer l1{Mat::Zero(2, 2), Vec::Zero(2), Activation::relu, 0.01};
  Layer l2{Mat::Identity(2, 2), Vec::Zero(2), Activation::identity, 0.01};
  bad.layers = {l1, l2};
  CHECK(architecture_check(bad).level == InjectivityLevel::unknown);
}

TEST_CASE("network spec validation") {
  NetworkSpec net;
  Layer l{Mat::Identity(2, 2), Vec::Zero(2), Activation::relu, 0.01};
  net.layers = {l};
  CHECK_THROWS_AS(net.validate(), InvalidArgument);  // final must be affine

  Layer bad_slope{Mat::Identity(2, 2), Vec::Zero(2), Activation::leaky_relu, 1.0};
  Layer out{Mat::Identity(2, 2), Vec::Zero(2), Activation::identity, 0.01};
  net.layers = {bad_slope, out};
  CHECK_THROWS_AS(net.validate(), InvalidArgument);
}

TEST_CASE("precompose pulls regions back through affine maps") {
  auto abs_f = catalog::abs_value_map();
  auto h = AffineMap::scalar(2.0, -1.0);  // z -> 2z - 1
  auto g = precompose(abs_f, h);          // g(z) = |2z - 1|
  for (double z : {-1.0, 0.0, 0.5, 0.2, 3.0})
    CHECK(g.evaluate(z) == doctest::Approx(std::abs(2.0 * z - 1.0)));
}
