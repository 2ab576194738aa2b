#include "mixident/lp.hpp"

#include <limits>
#include <vector>

#include "mixident/errors.hpp"

namespace mixident {
namespace lp {

namespace {

constexpr double kPivotEps = 1e-10;
constexpr double kCostEps = 1e-9;

// Canonical-form tableau: basis columns are kept as identity, `reduced`
// holds the current reduced-cost row and `objective` the basic solution value.
struct Tableau {
  Mat a;
  Vec rhs;
  std::vector<int> basis;
  Vec reduced;
  double objective = 0.0;
  std::vector<bool> banned;

  void price_out(const Vec& cost) {
    reduced = cost;
    objective = 0.0;
    for (size_t i = 0; i < basis.size(); ++i) {
      double cb = cost(basis[i]);
      if (cb != 0.0) {
        reduced -= cb * a.row(i).transpose();
        objective += cb * rhs(static_cast<Index>(i));
      }
    }
  }

  void pivot(Index row, Index col) {
    double p = a(row, col);
    a.row(row) /= p;
    rhs(row) /= p;
    for (Index i = 0; i < a.rows(); ++i) {
      if (i == row) continue;
      double f = a(i, col);
      if (f != 0.0) {
        a.row(i) -= f * a.row(row);
        rhs(i) -= f * rhs(row);
      }
    }
    double fr = reduced(col);
    if (fr != 0.0) {
      reduced -= fr * a.row(row).transpose();
      objective += fr * rhs(row);
    }
    basis[static_cast<size_t>(row)] = static_cast<int>(col);
  }

  // Bland's rule: smallest improving column, smallest-index tie-break on
  // the ratio test. Returns optimal/unbounded.
  Status run() {
    const Index m = a.rows(), n = a.cols();
    const long max_iters = 2000L * (m + n) + 10000L;
    for (long iter = 0; iter < max_iters; ++iter) {
      Index enter = -1;
      for (Index j = 0; j < n; ++j) {
        if (banned[static_cast<size_t>(j)]) continue;
        if (reduced(j) > kCostEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Status::optimal;
      Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        if (a(i, enter) > kPivotEps) {
          double ratio = std::max(rhs(i), 0.0) / a(i, enter);
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 &&
               (leave < 0 || basis[static_cast<size_t>(i)] <
                                 basis[static_cast<size_t>(leave)]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
    }
    throw Error("lp: simplex iteration limit exceeded");
  }
};

}  // namespace

Solution maximize(const Vec& c, const Mat& A, const Vec& b) {
  const Index m = A.rows();
  const Index dim = c.size();
  if (A.cols() != dim || b.size() != m)
    throw DimensionMismatch("lp::maximize: inconsistent sizes");

  // Free variables split as x = u - v; slack per row; artificials on rows
  // with negative right-hand side.
  std::vector<Index> artificial_rows;
  for (Index i = 0; i < m; ++i)
    if (b(i) < 0.0) artificial_rows.push_back(i);
  const Index n_art = static_cast<Index>(artificial_rows.size());
  const Index n_cols = 2 * dim + m + n_art;

  Tableau t;
  t.a = Mat::Zero(m, n_cols);
  t.rhs = Vec::Zero(m);
  t.basis.assign(static_cast<size_t>(m), 0);
  t.banned.assign(static_cast<size_t>(n_cols), false);

  Index art = 0;
  for (Index i = 0; i < m; ++i) {
    double sgn = (b(i) < 0.0) ? -1.0 : 1.0;
    t.a.block(i, 0, 1, dim) = sgn * A.row(i);
    t.a.block(i, dim, 1, dim) = -sgn * A.row(i);
    t.a(i, 2 * dim + i) = sgn;  // slack
    t.rhs(i) = sgn * b(i);
    if (b(i) < 0.0) {
      t.a(i, 2 * dim + m + art) = 1.0;
      t.basis[static_cast<size_t>(i)] = static_cast<int>(2 * dim + m + art);
      ++art;
    } else {
      t.basis[static_cast<size_t>(i)] = static_cast<int>(2 * dim + i);
    }
  }

  if (n_art > 0) {
    Vec phase1 = Vec::Zero(n_cols);
    for (Index j = 0; j < n_art; ++j) phase1(2 * dim + m + j) = -1.0;
    t.price_out(phase1);
    Status s1 = t.run();
    if (s1 != Status::optimal || t.objective < -1e-7)
      return {Status::infeasible, Vec::Zero(dim), 0.0};
    // Drive remaining artificials out of the basis where possible.
    for (Index i = 0; i < m; ++i) {
      int bi = t.basis[static_cast<size_t>(i)];
      if (bi >= 2 * dim + m) {
        for (Index j = 0; j < 2 * dim + m; ++j) {
          if (std::abs(t.a(i, j)) > kPivotEps) {
            t.pivot(i, j);
            break;
          }
        }
      }
    }
    for (Index j = 2 * dim + m; j < n_cols; ++j)
      t.banned[static_cast<size_t>(j)] = true;
  }

  Vec phase2 = Vec::Zero(n_cols);
  phase2.head(dim) = c;
  phase2.segment(dim, dim) = -c;
  t.price_out(phase2);
  Status s2 = t.run();

  Vec x = Vec::Zero(dim);
  for (Index i = 0; i < m; ++i) {
    int bi = t.basis[static_cast<size_t>(i)];
    if (bi < dim)
      x(bi) += t.rhs(i);
    else if (bi < 2 * dim)
      x(bi - dim) -= t.rhs(i);
  }
  return {s2, x, t.objective};
}

ChebyshevBall chebyshev_ball(const Mat& C, const Vec& d, double radius_cap) {
  const Index m = C.rows(), dim = C.cols();
  Mat A(m + 2, dim + 1);
  Vec b(m + 2);
  for (Index i = 0; i < m; ++i) {
    A.block(i, 0, 1, dim) = C.row(i);
    A(i, dim) = C.row(i).norm();
    b(i) = d(i);
  }
  A.row(m).setZero();
  A(m, dim) = -1.0;  // t >= 0
  b(m) = 0.0;
  A.row(m + 1).setZero();
  A(m + 1, dim) = 1.0;  // t <= cap
  b(m + 1) = radius_cap;

  Vec c = Vec::Zero(dim + 1);
  c(dim) = 1.0;
  Solution sol = maximize(c, A, b);
  ChebyshevBall ball;
  if (sol.status != Status::optimal) return ball;
  ball.feasible = true;
  ball.center = sol.x.head(dim);
  ball.radius = sol.objective;
  return ball;
}

}  // namespace lp
}  // namespace mixident
