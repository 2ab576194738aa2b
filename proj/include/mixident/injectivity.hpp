#ifndef MIXIDENT_INJECTIVITY_HPP
#define MIXIDENT_INJECTIVITY_HPP

#include <optional>
#include <string>
#include <utility>

#include "mixident/gmm.hpp"
#include "mixident/pwa.hpp"

namespace mixident {

// Injectivity hierarchy: injective => observably injective => weakly
// injective. "Weakly injective" means some image ball has unique preimages
// and the infinite-preimage set has measure zero in the image; "observably
// injective" means the multi-preimage set has measure zero in the image.
enum class InjectivityLevel {
  injective,
  observably_injective,
  weakly_injective,
  not_weakly_injective,
  unknown,
};

std::string to_string(InjectivityLevel level);

struct InjectivityVerdict {
  InjectivityLevel level = InjectivityLevel::unknown;
  std::string certificate;
  std::string method;  // static | exact_1d | exact_pairwise | sampling
  // Collision pair z1 != z2 with f(z1) = f(z2); mandatory for
  // not_weakly_injective verdicts produced by search.
  std::optional<std::pair<Vec, Vec>> witness;
};

// Exact verdict for 1-d functions via interval images; exact piece-pair
// analysis for m = n with few pieces; seeded sampling certificate otherwise.
// Sampling verdicts never certify full injectivity.
InjectivityVerdict classify_injectivity(const PiecewiseAffineFunction& f,
                                        int sample_budget = 2048,
                                        std::uint64_t seed = 0);

// Preimage cardinality at a generic point, computed by integrating the
// analytic continuation of the local pushforward mixture over all of R^m.
// The continuation is validated against the actual pushforward density on a
// ball of radius up to delta around x0.
int preimage_count_ext(const PiecewiseAffineFunction& f,
                       const GaussianMixture& prior, const Vec& x0,
                       double delta);

}  // namespace mixident

#endif
