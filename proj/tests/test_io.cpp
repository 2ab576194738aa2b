#include <random>

#include "doctest.h"
#include "mixident/catalog.hpp"
#include "mixident/errors.hpp"
#include "mixident/io.hpp"
#include "test_util.hpp"

using namespace mixident;

TEST_CASE("gmm json round trip") {
  std::mt19937_64 rng(3);
  auto g = testutil::random_gmm(2, 3, rng);
  auto j = io::gmm_to_json(g);
  CHECK(j["dim"] == 2);
  auto back = io::gmm_from_json(j);
  REQUIRE(back.size() == g.size());
  for (int c = 0; c < g.size(); ++c) {
    CHECK((back.component(c).mean - g.component(c).mean).norm() == 0.0);
    CHECK((back.component(c).cov - g.component(c).cov).norm() == 0.0);
    CHECK(back.component(c).weight == g.component(c).weight);
  }

  io::json bad = j;
  bad["components"][0]["cov"] = {{1.0, 0.0}};
  CHECK_THROWS_AS(io::gmm_from_json(bad), Error);
  io::json wrong_dim = j;
  wrong_dim["dim"] = 5;
  CHECK_THROWS_AS(io::gmm_from_json(wrong_dim), ParseError);
}

TEST_CASE("network json round trip") {
  auto net = catalog::half_abs_network();
  auto j = io::network_to_json(net);
  auto back = io::network_from_json(j);
  REQUIRE(back.layers.size() == net.layers.size());
  for (size_t i = 0; i < net.layers.size(); ++i) {
    CHECK((back.layers[i].weights - net.layers[i].weights).norm() == 0.0);
    CHECK(back.layers[i].act == net.layers[i].act);
  }
  CHECK(back.layers[0].slope == 0.5);

  io::json bad = j;
  bad["layers"][0]["act"] = "gelu";
  CHECK_THROWS_AS(io::network_from_json(bad), ParseError);
}

TEST_CASE("pwa json round trip") {
  auto [f, g] = catalog::folded_decoder_pair();
  auto j = io::pwa_to_json(f);
  CHECK(j.is_array());
  auto back = io::pwa_from_json(j);
  REQUIRE(back.piece_count() == f.piece_count());
  for (double z : {-6.0, -3.0, -1.0, 0.5, 2.5, 7.0})
    CHECK(back.evaluate(z) == doctest::Approx(f.evaluate(z)).epsilon(1e-15));
}

TEST_CASE("structure json round trip") {
  LatentStructure s;
  s.k = 2;
  s.domain_sizes = {2, 2};
  s.joint_weights = {0.1, 0.2, 0.3, 0.4};
  s.component_index = {3, 1, 0, 2};
  s.neighborhoods = {{0, 1}, {1, 2}};
  auto j = io::structure_to_json(s);
  auto back = io::structure_from_json(j);
  CHECK(back.k == 2);
  CHECK(back.component_index == s.component_index);
  CHECK(back.neighborhoods == s.neighborhoods);
}

TEST_CASE("unmixing result serialization") {
  std::mt19937_64 rng(5);
  auto z = testutil::random_factorial_gmm(2, 2, rng);
  auto mix = testutil::random_invertible_affine(2, rng);
  auto [pair, margin] = check_ratio_assumption(z);
  (void)margin;
  auto result = recover_unmixing(affine_pushforward(z, mix), pair.first,
                                 pair.second);
  attach_ground_truth(result, mix.matrix);
  auto j = io::unmixing_to_json(result);
  CHECK(j.contains("unmixing"));
  CHECK(j.contains("permutation"));
  CHECK(j.contains("residual"));
  // Full precision round trip of the recovered matrix.
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 2; ++c)
      CHECK(j["unmixing"][static_cast<size_t>(r)][static_cast<size_t>(c)]
                .get<double>() == result.unmixing(r, c));
}

TEST_CASE("scan config parsing") {
  std::string text = R"(
# toy scan
[ground_truth]
lambda = [0.5, 0.5]
mu = [-2.0, 1.0]
alpha = [1.0, 0.0]
beta = [1.0, 0.0]
pi = [0.5, 0.0]
noise_sigma = 0.5

[grid]
lambda_step = 0.25
mu1_values = [-3.0, -2.0, -1.0]
mu2_range = [0.0, 2.0]
mu2_step = 1.0
alpha1_values = [0.5, 1.0]
)";
  auto cfg = io::parse_scan_config(text);
  CHECK(cfg.ground_truth.lambda.size() == 2);
  CHECK(cfg.ground_truth.noise_sigma == 0.5);
  CHECK(cfg.grid.lambda_step == 0.25);
  REQUIRE(cfg.grid.mu.size() == 2);
  CHECK(cfg.grid.mu[0].values.size() == 3);
  CHECK(cfg.grid.mu[1].values.size() == 3);  // 0, 1, 2
  CHECK(cfg.grid.alpha[0].values.size() == 2);
  CHECK_FALSE(cfg.grid.beta[0].scanned());

  CHECK_THROWS_AS(io::parse_scan_config("[grid]\nlambda_step = 0.1\n"),
                  ParseError);
  CHECK_THROWS_AS(
      io::parse_scan_config("[ground_truth]\nlambda = [0.5, oops]\n"),
      ParseError);
}

TEST_CASE("landscape csv layout") {
  ToyParams gt;
  gt.lambda = {0.5, 0.5};
  gt.mu = {-1.0, 1.0};
  gt.alpha = {1.0, 0.0};
  gt.beta = {1.0, 0.0};
  gt.pi = {0.0, 0.0};
  gt.noise_sigma = 0.5;
  GridSpec spec;
  spec.mu = {ParamAxis{{-2.0, -1.0}}, ParamAxis{}};
  auto result = grid_search(gt, spec, 1);
  auto csv = io::landscape_to_csv(result);
  CHECK(csv.rfind("lambda1,lambda2,mu1,mu2,alpha1,alpha2,beta1,beta2,pi1,pi2,nll\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 cells

  auto mins = io::minimizers_to_json(result, gt);
  CHECK(mins["mode"] == "slice");
  CHECK(mins["cells"] == 2);
}
