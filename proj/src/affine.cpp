#include "mixident/affine.hpp"

#include "mixident/errors.hpp"

namespace mixident {

AffineMap::AffineMap(Mat a, Vec b) : matrix(std::move(a)), offset(std::move(b)) {
  if (matrix.rows() != offset.size())
    throw DimensionMismatch("AffineMap: matrix rows must match offset length");
}

AffineMap AffineMap::identity(Index m) {
  return AffineMap(Mat::Identity(m, m), Vec::Zero(m));
}

AffineMap AffineMap::scalar(double a, double b) {
  Mat m(1, 1);
  m(0, 0) = a;
  Vec v(1);
  v(0) = b;
  return AffineMap(m, v);
}

Vec AffineMap::operator()(const Vec& x) const {
  if (x.size() != in_dim())
    throw DimensionMismatch("AffineMap: input length mismatch");
  return matrix * x + offset;
}

double AffineMap::operator()(double x) const {
  if (in_dim() != 1 || out_dim() != 1)
    throw DimensionMismatch("AffineMap: scalar call on non-scalar map");
  return matrix(0, 0) * x + offset(0);
}

bool AffineMap::invertible(double cond_cap) const {
  if (!square() || matrix.rows() == 0) return false;
  double c = condition_number(matrix);
  return std::isfinite(c) && c < cond_cap;
}

AffineMap AffineMap::inverse() const {
  if (!invertible())
    throw NotInvertible("AffineMap: matrix is not invertible");
  Mat inv = matrix.inverse();
  return AffineMap(inv, -inv * offset);
}

AffineMap AffineMap::after(const AffineMap& inner) const {
  if (inner.out_dim() != in_dim())
    throw DimensionMismatch("AffineMap::after: dimension mismatch");
  return AffineMap(matrix * inner.matrix, matrix * inner.offset + offset);
}

}  // namespace mixident
