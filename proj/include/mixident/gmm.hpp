#ifndef MIXIDENT_GMM_HPP
#define MIXIDENT_GMM_HPP

#include <cstdint>
#include <vector>

#include "mixident/affine.hpp"
#include "mixident/linalg.hpp"

namespace mixident {

struct GaussianComponent {
  double weight;
  Vec mean;
  Mat cov;
};

// Finite Gaussian mixture in reduced form: strictly positive weights summing
// to one, non-degenerate symmetric covariances, no duplicated components.
// Immutable after construction; all operations are pure.
class GaussianMixture {
 public:
  Index dim() const { return dim_; }
  int size() const { return static_cast<int>(comps_.size()); }
  const std::vector<GaussianComponent>& components() const { return comps_; }
  const GaussianComponent& component(int j) const { return comps_[static_cast<size_t>(j)]; }

  double density(const Vec& x) const;
  double density(double x) const;  // 1-d convenience
  double log_density(const Vec& x) const;

  // Deterministic sampling: component by weight, then Cholesky-factor draw.
  Mat sample(int n, std::uint64_t seed) const;

  Vec mean() const;
  // Per-axis [lo, hi] covering every component mean +- k_sigma stddevs.
  std::pair<Vec, Vec> envelope(double k_sigma = 8.0) const;

  friend GaussianMixture make_gmm(std::vector<GaussianComponent> raw);

 private:
  GaussianMixture() = default;
  void build_cache();

  std::vector<GaussianComponent> comps_;
  Index dim_ = 0;
  std::vector<Mat> chol_;             // lower Cholesky factors
  std::vector<double> log_norm_;      // -0.5 (log det + m log 2pi)
};

// Validates, renormalizes weights within 1e-9 of one, merges duplicates,
// symmetrizes covariances and rejects degenerate ones.
GaussianMixture make_gmm(std::vector<GaussianComponent> raw);

// Convenience for 1-d mixtures given (weight, mean, variance) triples.
GaussianMixture make_gmm_1d(
    const std::vector<std::array<double, 3>>& weight_mean_var);

// Component j maps to (w_j, A mu_j + b, A Sigma_j A^T); result re-reduced.
GaussianMixture affine_pushforward(const GaussianMixture& gmm,
                                   const AffineMap& h);

// Closed-form L2 inner product <p, q> = sum_ij w_i w'_j phi(mu_i; mu'_j,
// Sigma_i + Sigma'_j).
double l2_inner(const GaussianMixture& p, const GaussianMixture& q);

}  // namespace mixident

#endif
