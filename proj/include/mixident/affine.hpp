#ifndef MIXIDENT_AFFINE_HPP
#define MIXIDENT_AFFINE_HPP

#include "mixident/linalg.hpp"

namespace mixident {

// Affine map x -> matrix * x + offset.
struct AffineMap {
  Mat matrix;  // n x m
  Vec offset;  // n

  AffineMap() = default;
  AffineMap(Mat a, Vec b);

  static AffineMap identity(Index m);
  static AffineMap scalar(double a, double b);  // 1-d convenience

  Index in_dim() const { return matrix.cols(); }
  Index out_dim() const { return matrix.rows(); }

  Vec operator()(const Vec& x) const;
  double operator()(double x) const;  // 1-d convenience

  bool square() const { return matrix.rows() == matrix.cols(); }
  // Invertibility requires a square matrix with condition number below the cap.
  bool invertible(double cond_cap = 1e12) const;
  AffineMap inverse() const;
  // Composition (this after inner): x -> this(inner(x)).
  AffineMap after(const AffineMap& inner) const;
};

}  // namespace mixident

#endif
