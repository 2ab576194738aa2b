#ifndef MIXIDENT_CATALOG_HPP
#define MIXIDENT_CATALOG_HPP

#include <utility>

#include "mixident/gmm.hpp"
#include "mixident/network.hpp"
#include "mixident/pwa.hpp"

namespace mixident {
namespace catalog {

// z -> |z| as a two-piece decomposition.
PiecewiseAffineFunction abs_value_map();

// Two three-component mixtures whose pushforwards through |z| coincide even
// though no affine map carries one prior onto the other.
std::pair<GaussianMixture, GaussianMixture> fold_equal_priors(double sigma = 1.0);

// 0.5 N(-2, 1) + 0.5 N(2, 1).
GaussianMixture two_bump_prior();

// A pair of continuous piecewise-affine maps with identical pushforwards of
// the two-bump prior that are not related by any affine reparametrization.
// The first is weakly injective; the second folds differently.
std::pair<PiecewiseAffineFunction, PiecewiseAffineFunction> folded_decoder_pair();

// Width pattern 1 -> 2 -> 2 -> 1 with leaky slope 1/2; computes |x| / 2.
NetworkSpec half_abs_network();

}  // namespace catalog
}  // namespace mixident

#endif
