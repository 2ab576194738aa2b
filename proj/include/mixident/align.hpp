#ifndef MIXIDENT_ALIGN_HPP
#define MIXIDENT_ALIGN_HPP

#include <string>
#include <utility>
#include <vector>

#include "mixident/affine.hpp"
#include "mixident/gmm.hpp"

namespace mixident {

struct LatentSample {
  Mat values;  // n_samples x m
  std::string run_id;
  std::string source;

  Index dim() const { return values.cols(); }
  Index rows() const { return values.rows(); }
};

struct AlignmentReport {
  AffineMap map;
  std::vector<int> permutation;  // component matching (mean matching only)
  double score = 0.0;
  std::string method;  // mean_matching | cca
  bool rank_deficient = false;
  Vec canonical_correlations;  // cca only
};

enum class MccMode { strong, weak };
enum class CorrelationKind { pearson, spearman };

// Normalized L2 discrepancy || p - q || / (||p||^{1/2} ||q||^{1/2}), all terms
// from the closed-form inner product.
double delta_l2(const GaussianMixture& p, const GaussianMixture& q);

struct MeanMatchResult {
  AffineMap map;
  bool rank_deficient = false;  // means affinely dependent; minimum-norm map
};

// Least-squares affine map sending src row k to dst row k, via orthogonal
// factorization of the homogeneous system.
MeanMatchResult mean_match_affine(const Mat& src_means, const Mat& dst_means);

// min over candidate affine maps of delta_l2(A_# p, q); candidates come from
// mean matching over all component permutations (injections on count
// mismatch) plus the identity.
std::pair<double, AlignmentReport> dist_aff_l2(const GaussianMixture& p,
                                               const GaussianMixture& q);

// Canonical correlation alignment of paired samples: whiten both, SVD the
// cross-covariance, compose the map from a-space to b-space.
AlignmentReport cca_align(const LatentSample& a, const LatentSample& b,
                          int dim);

// Mean matched absolute correlation between coordinate sets after optimal
// assignment.
double matched_abs_correlation_mean(
    const Mat& x, const Mat& y,
    CorrelationKind corr = CorrelationKind::pearson);

// Strong MCC: matched |correlation| between raw coordinates. Weak MCC: the
// CCA map is fit on the first half of the rows and evaluated out-of-sample on
// the second half. cca_dim < 0 means full dimension.
double mcc(const LatentSample& a, const LatentSample& b, MccMode mode,
           int cca_dim = -1, CorrelationKind corr = CorrelationKind::pearson);

// CSV with header z1,...,zm; run id from the file name.
LatentSample ingest_latents(const std::string& path);

}  // namespace mixident

#endif
