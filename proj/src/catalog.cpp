#include "mixident/catalog.hpp"

namespace mixident {
namespace catalog {

namespace {

// One-dimensional piece on [lo, hi] (either bound may be infinite) with map
// z -> a z + b.
AffinePiece piece_1d(double lo, double hi, double a, double b) {
  AffinePiece p;
  p.region = Region(1);
  if (std::isfinite(hi)) p.region.add(Vec::Constant(1, 1.0), hi);
  if (std::isfinite(lo)) p.region.add(Vec::Constant(1, -1.0), -lo);
  p.matrix = Mat::Constant(1, 1, a);
  p.offset = Vec::Constant(1, b);
  return p;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PiecewiseAffineFunction abs_value_map() {
  std::vector<AffinePiece> pieces;
  pieces.push_back(piece_1d(-kInf, 0.0, -1.0, 0.0));
  pieces.push_back(piece_1d(0.0, kInf, 1.0, 0.0));
  return PiecewiseAffineFunction(std::move(pieces), 1, 1);
}

std::pair<GaussianMixture, GaussianMixture> fold_equal_priors(double sigma) {
  double v = sigma * sigma;
  auto p = make_gmm_1d({{1.0 / 3, -2.0, v}, {1.0 / 3, -1.0, v}, {1.0 / 3, 3.0, v}});
  auto q = make_gmm_1d({{1.0 / 3, -2.0, v}, {1.0 / 3, 1.0, v}, {1.0 / 3, 3.0, v}});
  return {p, q};
}

GaussianMixture two_bump_prior() {
  return make_gmm_1d({{0.5, -2.0, 1.0}, {0.5, 2.0, 1.0}});
}

std::pair<PiecewiseAffineFunction, PiecewiseAffineFunction> folded_decoder_pair() {
  std::vector<AffinePiece> f;
  f.push_back(piece_1d(2.0, kInf, 1.0, -4.0));
  f.push_back(piece_1d(-2.0, 2.0, -1.0, 0.0));
  f.push_back(piece_1d(-4.0, -2.0, 1.0, 4.0));
  f.push_back(piece_1d(-kInf, -4.0, 0.2, 0.8));

  std::vector<AffinePiece> g;
  g.push_back(piece_1d(4.0, kInf, 1.0, -4.0));
  g.push_back(piece_1d(2.0, 4.0, -1.0, 4.0));
  g.push_back(piece_1d(-2.0, 2.0, 1.0, 0.0));
  g.push_back(piece_1d(-4.0, -2.0, -1.0, -4.0));
  g.push_back(piece_1d(-kInf, -4.0, 0.2, 0.8));

  return {PiecewiseAffineFunction(std::move(f), 1, 1),
          PiecewiseAffineFunction(std::move(g), 1, 1)};
}

NetworkSpec half_abs_network() {
  NetworkSpec net;
  Layer l1;
  l1.weights = Mat(2, 1);
  l1.weights << 1.0, -1.0;
  l1.bias = Vec::Zero(2);
  l1.act = Activation::leaky_relu;
  l1.slope = 0.5;
  Layer l2;
  l2.weights = Mat(2, 2);
  l2.weights << 1.0, -1.0, 1.0, 1.0;
  l2.bias = Vec::Zero(2);
  l2.act = Activation::identity;
  Layer l3;
  l3.weights = Mat(1, 2);
  l3.weights << 0.0, 1.0;
  l3.bias = Vec::Zero(1);
  l3.act = Activation::identity;
  net.layers = {l1, l2, l3};
  return net;
}

}  // namespace catalog
}  // namespace mixident
