#include "mixident/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mixident/errors.hpp"

namespace mixident {

Mat psd_sqrt(const Mat& sigma, double floor_eps) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(sigma));
  Vec lam = es.eigenvalues().cwiseMax(floor_eps);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

double min_eigenvalue(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(sym));
  return es.eigenvalues().minCoeff();
}

double condition_number(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Index numeric_rank(const Mat& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

double gaussian_density(const Vec& x, const Vec& mean, const Mat& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw DimensionMismatch("gaussian_density: incompatible sizes");
  Eigen::LLT<Mat> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success)
    throw DegenerateCovariance("gaussian_density: covariance not positive definite");
  Vec diff = x - mean;
  Vec half = llt.matrixL().solve(diff);
  double log_det = 0.0;
  for (Index i = 0; i < cov.rows(); ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  double m = static_cast<double>(x.size());
  double log_p = -0.5 * (half.squaredNorm() + log_det + m * std::log(2.0 * M_PI));
  return std::exp(log_p);
}

}  // namespace mixident
