#ifndef MIXIDENT_DISENTANGLE_HPP
#define MIXIDENT_DISENTANGLE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "mixident/gmm.hpp"

namespace mixident {

// Discrete latent state U = (U_1, ..., U_k) behind a mixture prior, with the
// neighborhoods nbhd(U_i) of continuous coordinates each U_i touches.
struct LatentStructure {
  int k = 0;
  std::vector<int> domain_sizes;                 // d_1 ... d_k
  std::vector<double> joint_weights;             // over prod [d_i], all > 0
  std::vector<int> component_index;              // flat state -> component
  std::vector<std::vector<int>> neighborhoods;   // per U_i, subset of [m]

  void validate(int mixture_components = -1) const;
};

struct UnmixingResult {
  Mat unmixing;         // recovered A'
  Vec singular_values;  // of V1^{-1} V2
  int pair_i1 = 0;
  int pair_i2 = 1;
  // Ground-truth diagnostics, filled by attach_ground_truth.
  std::optional<Mat> permutation;
  std::optional<Vec> scaling;
  std::optional<double> residual;
};

// Best pair of components for the distinct-variance-ratio condition: for each
// unordered pair the per-axis diagonal-variance ratios are formed and the
// smallest gap between two ratios is the pair's margin. Requires
// componentwise-diagonal covariances.
std::pair<std::pair<int, int>, double> check_ratio_assumption(
    const GaussianMixture& gmm);

// Recovers A' with (A')^{-1} A = Q D (permutation times positive diagonal)
// from the covariances of two observed components: V_i are their symmetric
// PSD square roots and the SVD of V1^{-1} V2 supplies the rotation. Column
// signs are fixed so each column's largest-magnitude entry is positive.
UnmixingResult recover_unmixing(const GaussianMixture& observed, int i1,
                                int i2);

// Fills permutation/scaling/residual against a known mixing matrix, flipping
// unidentifiable column signs of A' toward the supplied ground truth.
void attach_ground_truth(UnmixingResult& result, const Mat& a_true);

// Picks the best component pair from observable invariants, unmixes, and
// returns the recovered latent mixture with the weighted mean at the origin
// and near-zero off-diagonal covariance entries cleaned.
std::pair<GaussianMixture, UnmixingResult> recover_latent(
    const GaussianMixture& observed);

// True iff nbhd(U_i) is not a subset of nbhd(U_j) for every i != j.
bool check_subset_condition(const LatentStructure& structure);

}  // namespace mixident

#endif
