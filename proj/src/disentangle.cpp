#include "mixident/disentangle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixident/errors.hpp"

namespace mixident {

namespace {

constexpr double kDiagonalTol = 1e-9;
constexpr double kSingularGapTol = 1e-8;
constexpr double kPostHocDiagTol = 1e-6;

void require_diagonal(const GaussianMixture& gmm) {
  for (const auto& c : gmm.components()) {
    for (Index p = 0; p < gmm.dim(); ++p)
      for (Index q = 0; q < gmm.dim(); ++q)
        if (p != q && std::abs(c.cov(p, q)) > kDiagonalTol)
          throw NotConditionallyFactorial(
              "check_ratio_assumption: off-diagonal covariance entries exceed 1e-9");
  }
}

double pair_ratio_margin(const GaussianMixture& gmm, int i1, int i2) {
  const Index m = gmm.dim();
  if (m == 1) return std::numeric_limits<double>::infinity();
  Vec r(m);
  for (Index t = 0; t < m; ++t)
    r(t) = gmm.component(i1).cov(t, t) / gmm.component(i2).cov(t, t);
  double margin = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < m; ++t)
    for (Index s = t + 1; s < m; ++s)
      margin = std::min(margin, std::abs(r(t) - r(s)));
  return margin;
}

double min_consecutive_gap(const Vec& s) {
  if (s.size() < 2) return std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < s.size(); ++i)
    gap = std::min(gap, std::abs(s(i) - s(i + 1)));
  return gap;
}

Vec whitened_cross_singular_values(const GaussianMixture& gmm, int i1, int i2) {
  Mat v1 = psd_sqrt(gmm.component(i1).cov);
  Mat v2 = psd_sqrt(gmm.component(i2).cov);
  Mat m = v1.llt().solve(v2);
  return Eigen::JacobiSVD<Mat>(m).singularValues();
}

// Assignment maximizing the total magnitude of selected entries; brute force
// over permutations (recovery runs at m <= 8).
std::vector<int> best_assignment(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  if (n > 8) throw InvalidArgument("best_assignment: dimension above 8");
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int r = 0; r < n; ++r) score += std::abs(m(r, perm[static_cast<size_t>(r)]));
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

void LatentStructure::validate(int mixture_components) const {
  if (k < 1) throw InvalidArgument("LatentStructure: k must be >= 1");
  if (static_cast<int>(domain_sizes.size()) != k ||
      static_cast<int>(neighborhoods.size()) != k)
    throw DimensionMismatch("LatentStructure: per-variable lists must have length k");
  long total = 1;
  for (int d : domain_sizes) {
    if (d < 1) throw InvalidArgument("LatentStructure: domain sizes must be >= 1");
    total *= d;
  }
  if (static_cast<long>(joint_weights.size()) != total)
    throw DimensionMismatch("LatentStructure: joint weight table size mismatch");
  if (mixture_components >= 0 && total != mixture_components)
    throw DimensionMismatch(
        "LatentStructure: product of domain sizes must equal component count");
  double sum = 0.0;
  for (double w : joint_weights) {
    if (!(w > 0.0))
      throw NonPositiveWeight("LatentStructure: joint weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw NonPositiveWeight("LatentStructure: joint weights must sum to 1");
  std::vector<int> seen(joint_weights.size(), 0);
  if (component_index.size() != joint_weights.size())
    throw DimensionMismatch("LatentStructure: component index size mismatch");
  for (int c : component_index) {
    if (c < 0 || c >= static_cast<int>(joint_weights.size()) || seen[static_cast<size_t>(c)]++)
      throw InvalidArgument("LatentStructure: component index must be a bijection");
  }
}

std::pair<std::pair<int, int>, double> check_ratio_assumption(
    const GaussianMixture& gmm) {
  if (gmm.size() < 2)
    throw InvalidArgument("check_ratio_assumption: at least two components required");
  require_diagonal(gmm);
  double best = -1.0;
  std::pair<int, int> best_pair{0, 1};
  for (int i = 0; i < gmm.size(); ++i)
    for (int j = i + 1; j < gmm.size(); ++j) {
      double margin = pair_ratio_margin(gmm, i, j);
      if (margin > best) {
        best = margin;
        best_pair = {i, j};
      }
    }
  if (!(best > 0.0))
    throw NoValidPair("check_ratio_assumption: every pair has tied variance ratios");
  return {best_pair, best};
}

UnmixingResult recover_unmixing(const GaussianMixture& observed, int i1,
                                int i2) {
  const Index m = observed.dim();
  if (i1 == i2 || i1 < 0 || i2 < 0 || i1 >= observed.size() ||
      i2 >= observed.size())
    throw InvalidArgument("recover_unmixing: invalid component pair");

  Mat v1 = psd_sqrt(observed.component(i1).cov);
  Mat v2 = psd_sqrt(observed.component(i2).cov);
  Mat cross = v1.llt().solve(v2);
  Eigen::JacobiSVD<Mat> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec s = svd.singularValues();
  if (min_consecutive_gap(s) < kSingularGapTol)
    throw RepeatedSingularValues(
        "recover_unmixing: singular values of V1^{-1} V2 are not distinct");

  Mat a_prime = v1 * svd.matrixU();
  for (Index c = 0; c < m; ++c) {
    Index imax;
    a_prime.col(c).cwiseAbs().maxCoeff(&imax);
    if (a_prime(imax, c) < 0.0) a_prime.col(c) *= -1.0;
  }

  // Post-hoc factoriality diagnostic: unmixing must diagonalize every
  // component covariance, not only the chosen pair.
  Mat t = a_prime.inverse();
  for (const auto& comp : observed.components()) {
    Mat c = t * comp.cov * t.transpose();
    double diag_max = c.diagonal().cwiseAbs().maxCoeff();
    for (Index p = 0; p < m; ++p)
      for (Index q = 0; q < m; ++q)
        if (p != q && std::abs(c(p, q)) > kPostHocDiagTol * diag_max)
          throw AssumptionViolated(
              "recover_unmixing: unmixed covariances are not diagonal; the "
              "latent mixture is not conditionally factorial or the ratio "
              "condition fails");
  }

  UnmixingResult result;
  result.unmixing = a_prime;
  result.singular_values = s;
  result.pair_i1 = i1;
  result.pair_i2 = i2;
  return result;
}

void attach_ground_truth(UnmixingResult& result, const Mat& a_true) {
  const Index m = a_true.rows();
  if (result.unmixing.rows() != m)
    throw DimensionMismatch("attach_ground_truth: dimension mismatch");
  Mat mix = result.unmixing.inverse() * a_true;
  auto perm = best_assignment(mix);
  // Column signs of A' are unidentifiable; flip toward the ground truth so
  // the detected diagonal is positive.
  for (Index r = 0; r < m; ++r) {
    if (mix(r, perm[static_cast<size_t>(r)]) < 0.0) {
      mix.row(r) *= -1.0;
      result.unmixing.col(r) *= -1.0;
    }
  }
  Mat q = Mat::Zero(m, m);
  Vec d = Vec::Zero(m);
  Mat row_normalized = mix;
  for (Index r = 0; r < m; ++r) {
    int c = perm[static_cast<size_t>(r)];
    q(r, c) = 1.0;
    d(c) = mix(r, c);
    row_normalized.row(r) /= mix(r, c);
  }
  result.permutation = q;
  result.scaling = d;
  result.residual = (row_normalized - q).norm();
}

std::pair<GaussianMixture, UnmixingResult> recover_latent(
    const GaussianMixture& observed) {
  if (observed.size() < 2)
    throw InvalidArgument("recover_latent: at least two components required");
  // The latent ratio condition is observable: the singular values of
  // V_i^{-1} V_j are invariant under the unknown mixing map.
  double best_gap = -1.0;
  std::pair<int, int> best_pair{0, 1};
  for (int i = 0; i < observed.size(); ++i)
    for (int j = 0; j < observed.size(); ++j) {
      if (i == j) continue;
      double gap =
          min_consecutive_gap(whitened_cross_singular_values(observed, i, j));
      if (gap > best_gap) {
        best_gap = gap;
        best_pair = {i, j};
      }
    }

  UnmixingResult unmix = recover_unmixing(observed, best_pair.first,
                                          best_pair.second);
  Mat t = unmix.unmixing.inverse();
  AffineMap to_latent(t, -t * observed.mean());
  GaussianMixture pulled = affine_pushforward(observed, to_latent);

  std::vector<GaussianComponent> cleaned;
  cleaned.reserve(pulled.components().size());
  for (const auto& comp : pulled.components()) {
    GaussianComponent c = comp;
    c.cov = symmetrize(c.cov);
    double diag_max = c.cov.diagonal().cwiseAbs().maxCoeff();
    for (Index p = 0; p < pulled.dim(); ++p)
      for (Index q = 0; q < pulled.dim(); ++q)
        if (p != q && std::abs(c.cov(p, q)) < kPostHocDiagTol * diag_max)
          c.cov(p, q) = 0.0;
    cleaned.push_back(std::move(c));
  }
  return {make_gmm(std::move(cleaned)), unmix};
}

bool check_subset_condition(const LatentStructure& structure) {
  structure.validate();
  const int k = structure.k;
  std::vector<std::vector<int>> nb = structure.neighborhoods;
  for (auto& v : nb) std::sort(v.begin(), v.end());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      if (std::includes(nb[static_cast<size_t>(j)].begin(),
                        nb[static_cast<size_t>(j)].end(),
                        nb[static_cast<size_t>(i)].begin(),
                        nb[static_cast<size_t>(i)].end()))
        return false;  // nbhd(U_i) is contained in nbhd(U_j)
    }
  return true;
}

}  // namespace mixident
