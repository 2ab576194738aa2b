#ifndef MIXIDENT_LINALG_HPP
#define MIXIDENT_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace mixident {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

// Symmetric part of a square matrix.
inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

// Symmetric PSD square root via eigendecomposition, eigenvalues floored at eps.
Mat psd_sqrt(const Mat& sigma, double floor_eps = 1e-12);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& sym);

// 2-norm condition number (largest/smallest singular value).
double condition_number(const Mat& a);

// Column rank with a relative singular-value threshold.
Index numeric_rank(const Mat& a, double rel_tol = 1e-9);

// Standard normal pdf and cdf.
inline double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
}
inline double normal_cdf(double t) { return 0.5 * std::erfc(-t / M_SQRT2); }

// Gaussian density phi(x; mean, cov) for small dense covariances.
double gaussian_density(const Vec& x, const Vec& mean, const Mat& cov);

}  // namespace mixident

#endif
