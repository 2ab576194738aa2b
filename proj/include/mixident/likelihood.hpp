#ifndef MIXIDENT_LIKELIHOOD_HPP
#define MIXIDENT_LIKELIHOOD_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mixident/affine.hpp"
#include "mixident/gmm.hpp"
#include "mixident/pwa.hpp"

namespace mixident {

// x = decoder(z) + noise, z ~ prior, noise ~ N(0, noise_sigma^2 I).
struct GenerativeModel {
  GaussianMixture prior;
  PiecewiseAffineFunction decoder;
  double noise_sigma = 0.0;

  void validate() const;
};

// f(z) = alpha_1 relu(beta_1 z + pi_1) + alpha_2 relu(beta_2 z + pi_2).
// Dead units (alpha_j = 0 or beta_j = 0) are permitted.
PiecewiseAffineFunction single_layer_decoder(const std::array<double, 2>& alpha,
                                             const std::array<double, 2>& beta,
                                             const std::array<double, 2>& pi);

// Noiseless observable density at a generic point: sum over preimages of
// prior density divided by |det| of the local piece.
double pushforward_density(const GenerativeModel& model, const Vec& x);

// Exact observable density for noise_sigma > 0 in one dimension: per affine
// piece the Gaussian-times-Gaussian integrand has a closed form through the
// scalar normal CDF.
double noisy_density(const GenerativeModel& model, double x);

// Precomputed ground-truth quadrature shared across candidate evaluations.
struct NllContext {
  Vec nodes;
  Vec weighted;  // quadrature weight times ground-truth density
  double gt_nll = 0.0;
};

NllContext make_nll_context(const GenerativeModel& gt, int nodes_per_panel = 24,
                            int max_panels = 32);

// Expected negative log candidate density under the ground-truth observable
// distribution. Densities below 1e-300 are floored; underflows are counted
// when a counter is supplied.
double population_nll(const NllContext& ctx, const GenerativeModel& candidate,
                      int* underflows = nullptr);
double population_nll(const GenerativeModel& candidate,
                      const GenerativeModel& gt, int* underflows = nullptr);

// Scalar toy family: J-component 1-d prior with fixed component variance and
// a two-unit single-layer decoder.
struct ToyParams {
  std::vector<double> lambda;  // J entries, zeros allowed
  std::vector<double> mu;      // J entries
  double component_var = 1.0;
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<double, 2> beta{0.0, 0.0};
  std::array<double, 2> pi{0.0, 0.0};
  double noise_sigma = 0.5;
};

GenerativeModel build_toy_model(const ToyParams& params);

// Per-parameter scan axis; an empty value list keeps the slot fixed at the
// ground-truth value.
struct ParamAxis {
  std::vector<double> values;
  bool scanned() const { return !values.empty(); }
};

struct GridSpec {
  double lambda_step = 0.0;  // > 0 scans the weight simplex (zeros allowed)
  std::vector<ParamAxis> mu;  // one axis per component; empty = all fixed
  std::array<ParamAxis, 2> alpha;
  std::array<ParamAxis, 2> beta;
  std::array<ParamAxis, 2> pi;
  std::size_t cell_cap = 10'000'000;
};

struct GridSearchResult {
  int J = 0;
  std::size_t row_len = 0;        // 2J + 6 parameters + nll
  std::vector<double> table;      // row-major landscape
  std::vector<std::size_t> minimizer_indices;  // nll within 1e-9 of the min
  double min_nll = 0.0;
  double gt_nll = 0.0;
  double gibbs_margin = 0.0;  // min over cells of nll - gt_nll
  int underflows = 0;
  bool full_scan = false;

  std::size_t cells() const { return table.size() / row_len; }
  ToyParams params_at(std::size_t idx, const ToyParams& gt) const;
  double nll_at(std::size_t idx) const;
};

GridSearchResult grid_search(const ToyParams& gt, const GridSpec& spec,
                             int threads = 0);

// Affine equivalence of generative models: an invertible h with
// prior2 = h_# prior1 and decoder2 = decoder1 o h^{-1}, verified on the
// mixtures in closed form and on the decoders at seeded probe points.
std::pair<bool, std::optional<AffineMap>> affine_equivalent(
    const GenerativeModel& model1, const GenerativeModel& model2, double tol);

}  // namespace mixident

#endif
