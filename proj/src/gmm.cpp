#include "mixident/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "mixident/errors.hpp"

namespace mixident {

namespace {

constexpr double kWeightSumTol = 1e-9;
constexpr double kMergeTol = 1e-9;
constexpr double kEigenFloor = 1e-12;

bool same_component(const GaussianComponent& a, const GaussianComponent& b) {
  return (a.mean - b.mean).lpNorm<Eigen::Infinity>() < kMergeTol &&
         (a.cov - b.cov).lpNorm<Eigen::Infinity>() < kMergeTol;
}

}  // namespace

GaussianMixture make_gmm(std::vector<GaussianComponent> raw) {
  if (raw.empty()) throw InvalidArgument("make_gmm: at least one component required");
  const Index m = raw.front().mean.size();
  if (m < 1) throw DimensionMismatch("make_gmm: empty mean vector");

  double sum = 0.0;
  for (auto& c : raw) {
    if (c.mean.size() != m || c.cov.rows() != m || c.cov.cols() != m)
      throw DimensionMismatch("make_gmm: inconsistent component dimensions");
    if (!(c.weight > 0.0))
      throw NonPositiveWeight("make_gmm: weights must be strictly positive");
    c.cov = symmetrize(c.cov);
    if (min_eigenvalue(c.cov) <= kEigenFloor)
      throw DegenerateCovariance("make_gmm: covariance minimum eigenvalue <= 1e-12");
    sum += c.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw NonPositiveWeight("make_gmm: weights must sum to 1 within 1e-9, got " +
                            std::to_string(sum));
  for (auto& c : raw) c.weight /= sum;

  // Reduced form: merge components sharing mean and covariance.
  std::vector<GaussianComponent> merged;
  for (auto& c : raw) {
    bool found = false;
    for (auto& mcomp : merged) {
      if (same_component(mcomp, c)) {
        mcomp.weight += c.weight;
        found = true;
        break;
      }
    }
    if (!found) merged.push_back(std::move(c));
  }

  GaussianMixture gmm;
  gmm.comps_ = std::move(merged);
  gmm.dim_ = m;
  gmm.build_cache();
  return gmm;
}

GaussianMixture make_gmm_1d(
    const std::vector<std::array<double, 3>>& weight_mean_var) {
  std::vector<GaussianComponent> comps;
  comps.reserve(weight_mean_var.size());
  for (const auto& [w, mu, var] : weight_mean_var) {
    GaussianComponent c;
    c.weight = w;
    c.mean = Vec::Constant(1, mu);
    c.cov = Mat::Constant(1, 1, var);
    comps.push_back(std::move(c));
  }
  return make_gmm(std::move(comps));
}

void GaussianMixture::build_cache() {
  chol_.clear();
  log_norm_.clear();
  for (const auto& c : comps_) {
    Eigen::LLT<Mat> llt(c.cov);
    if (llt.info() != Eigen::Success)
      throw DegenerateCovariance("GaussianMixture: Cholesky failed");
    Mat L = llt.matrixL();
    double log_det = 0.0;
    for (Index i = 0; i < dim_; ++i) log_det += 2.0 * std::log(L(i, i));
    chol_.push_back(std::move(L));
    log_norm_.push_back(-0.5 * (log_det + dim_ * std::log(2.0 * M_PI)));
  }
}

double GaussianMixture::density(const Vec& x) const {
  if (x.size() != dim_)
    throw DimensionMismatch("GaussianMixture::density: point length mismatch");
  double total = 0.0;
  for (size_t j = 0; j < comps_.size(); ++j) {
    Vec half = chol_[j].triangularView<Eigen::Lower>().solve(x - comps_[j].mean);
    total += comps_[j].weight * std::exp(log_norm_[j] - 0.5 * half.squaredNorm());
  }
  return total;
}

double GaussianMixture::density(double x) const {
  return density(Vec::Constant(1, x));
}

double GaussianMixture::log_density(const Vec& x) const {
  return std::log(std::max(density(x), 1e-300));
}

Mat GaussianMixture::sample(int n, std::uint64_t seed) const {
  if (n < 1) throw InvalidArgument("sample: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  weights.reserve(comps_.size());
  for (const auto& c : comps_) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> unit(0.0, 1.0);

  Mat out(n, dim_);
  Vec xi(dim_);
  for (int i = 0; i < n; ++i) {
    int j = pick(rng);
    for (Index k = 0; k < dim_; ++k) xi(k) = unit(rng);
    out.row(i) =
        (comps_[static_cast<size_t>(j)].mean + chol_[static_cast<size_t>(j)] * xi)
            .transpose();
  }
  return out;
}

Vec GaussianMixture::mean() const {
  Vec mu = Vec::Zero(dim_);
  for (const auto& c : comps_) mu += c.weight * c.mean;
  return mu;
}

std::pair<Vec, Vec> GaussianMixture::envelope(double k_sigma) const {
  Vec lo = Vec::Constant(dim_, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(dim_, -std::numeric_limits<double>::infinity());
  for (const auto& c : comps_) {
    Eigen::SelfAdjointEigenSolver<Mat> es(c.cov);
    double sigma_max = std::sqrt(es.eigenvalues().maxCoeff());
    for (Index k = 0; k < dim_; ++k) {
      lo(k) = std::min(lo(k), c.mean(k) - k_sigma * sigma_max);
      hi(k) = std::max(hi(k), c.mean(k) + k_sigma * sigma_max);
    }
  }
  return {lo, hi};
}

GaussianMixture affine_pushforward(const GaussianMixture& gmm,
                                   const AffineMap& h) {
  if (h.in_dim() != gmm.dim())
    throw DimensionMismatch("affine_pushforward: map input dim mismatch");
  if (numeric_rank(h.matrix) < h.in_dim())
    throw DegenerateCovariance(
        "affine_pushforward: matrix lacks full column rank");
  std::vector<GaussianComponent> comps;
  comps.reserve(static_cast<size_t>(gmm.size()));
  for (const auto& c : gmm.components()) {
    GaussianComponent out;
    out.weight = c.weight;
    out.mean = h.matrix * c.mean + h.offset;
    out.cov = h.matrix * c.cov * h.matrix.transpose();
    comps.push_back(std::move(out));
  }
  return make_gmm(std::move(comps));
}

double l2_inner(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != q.dim())
    throw DimensionMismatch("l2_inner: mixtures of different dimension");
  double total = 0.0;
  for (const auto& a : p.components())
    for (const auto& b : q.components())
      total += a.weight * b.weight *
               gaussian_density(a.mean, b.mean, a.cov + b.cov);
  return total;
}

}  // namespace mixident
