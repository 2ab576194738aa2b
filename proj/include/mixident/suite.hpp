#ifndef MIXIDENT_SUITE_HPP
#define MIXIDENT_SUITE_HPP

#include <optional>
#include <string>
#include <vector>

#include "mixident/disentangle.hpp"
#include "mixident/likelihood.hpp"

namespace mixident {

struct EqualityEvidence {
  std::vector<double> grid;  // evaluation points (flattened for m = 2)
  int points_used = 0;
  int points_skipped = 0;  // non-generic points excluded
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  double tolerance = 0.0;
  bool equal = false;
  std::string note;
};

// Compares the observable densities of two noiseless models on a grid over
// the joint image envelope, excluding non-generic points; atoms created by
// constant pieces are compared by mass separately.
EqualityEvidence verify_pushforward_equality(const GenerativeModel& m1,
                                             const GenerativeModel& m2,
                                             double tolerance,
                                             int grid_points = 2000);

// First verified affine map carrying p onto q (weights equal, components
// conjugate within tolerance), enumerating component matchings in
// lexicographic order. Returns nothing when no witness exists.
std::optional<AffineMap> recover_affine_witness(const GaussianMixture& p,
                                                const GaussianMixture& q,
                                                double tolerance);

// Every verified witness across matchings and orthogonal-freedom candidates.
std::vector<AffineMap> all_affine_witnesses(const GaussianMixture& p,
                                            const GaussianMixture& q,
                                            double tolerance);

// Desk-scale contrapositive of the equal-pushforward identifiability
// statement: either the pushforwards differ or an affine witness between the
// priors exists. Requires both decoders at least weakly injective.
bool verify_npmix_theorem(const GenerativeModel& m1, const GenerativeModel& m2);

struct RecoveryReport {
  double ratio_margin = 0.0;
  bool ratio_ok = false;
  std::optional<bool> subset_ok;  // set when a latent structure is supplied
  std::string positivity = "unchecked";
  std::string nondegeneracy = "unchecked";  // existential conditions
  std::vector<std::string> notes;
};

// Noiseless end-to-end recovery: invert the decoder on its first invertible
// piece (the oracle for the observed mixture), unmix, and report assumption
// checks.
std::pair<GaussianMixture, RecoveryReport> end_to_end_recovery(
    const GenerativeModel& observed,
    const std::optional<LatentStructure>& structure = std::nullopt);

}  // namespace mixident

#endif
