#include "mixident/pwa.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "mixident/errors.hpp"
#include "mixident/lp.hpp"

namespace mixident {

namespace {
constexpr double kZeroNormal = 1e-13;
constexpr double kDedupTol = 1e-8;
}  // namespace

void Region::add(Vec normal, double offset) {
  if (dim_ == 0) dim_ = normal.size();
  if (normal.size() != dim_)
    throw DimensionMismatch("Region::add: normal length mismatch");
  double norm = normal.norm();
  if (norm < kZeroNormal) {
    if (offset < -1e-9) always_empty_ = true;
    return;  // vacuous 0 <= offset
  }
  halves_.push_back({normal / norm, offset / norm});
}

bool Region::contains(const Vec& z, double tol) const {
  if (always_empty_) return false;
  for (const auto& h : halves_)
    if (h.normal.dot(z) > h.offset + tol) return false;
  return true;
}

double Region::margin(const Vec& z) const {
  if (always_empty_) return -std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& h : halves_) m = std::min(m, h.offset - h.normal.dot(z));
  return m;
}

Mat Region::constraint_matrix() const {
  Mat c(static_cast<Index>(halves_.size()), dim_);
  for (size_t i = 0; i < halves_.size(); ++i)
    c.row(static_cast<Index>(i)) = halves_[i].normal.transpose();
  return c;
}

Vec Region::constraint_rhs() const {
  Vec d(static_cast<Index>(halves_.size()));
  for (size_t i = 0; i < halves_.size(); ++i)
    d(static_cast<Index>(i)) = halves_[i].offset;
  return d;
}

std::pair<double, double> Region::interval() const {
  if (dim_ != 1) throw DimensionMismatch("Region::interval: 1-d only");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (always_empty_) return {1.0, -1.0};
  for (const auto& h : halves_) {
    double c = h.normal(0);
    if (c > 0.0)
      hi = std::min(hi, h.offset / c);
    else
      lo = std::max(lo, h.offset / c);
  }
  return {lo, hi};
}

PiecewiseAffineFunction::PiecewiseAffineFunction(std::vector<AffinePiece> pieces,
                                                 Index in_dim, Index out_dim)
    : pieces_(std::move(pieces)), in_dim_(in_dim), out_dim_(out_dim) {
  if (pieces_.empty())
    throw InvalidArgument("PiecewiseAffineFunction: needs at least one piece");
  for (const auto& p : pieces_) {
    if (p.matrix.rows() != out_dim_ || p.matrix.cols() != in_dim_ ||
        p.offset.size() != out_dim_)
      throw DimensionMismatch("PiecewiseAffineFunction: piece dimension mismatch");
    if (p.region.dim() != 0 && p.region.dim() != in_dim_)
      throw DimensionMismatch("PiecewiseAffineFunction: region dimension mismatch");
  }
}

PiecewiseAffineFunction PiecewiseAffineFunction::single_piece(Mat a, Vec b) {
  AffinePiece p;
  p.region = Region(a.cols());
  p.matrix = std::move(a);
  p.offset = std::move(b);
  Index in = p.matrix.cols(), out = p.matrix.rows();
  return PiecewiseAffineFunction({std::move(p)}, in, out);
}

int PiecewiseAffineFunction::locate(const Vec& z, double tol) const {
  if (z.size() != in_dim_)
    throw DimensionMismatch("PiecewiseAffineFunction::locate: point length");
  for (size_t i = 0; i < pieces_.size(); ++i)
    if (pieces_[i].region.contains(z, tol)) return static_cast<int>(i);
  // Fall back to the least-violated region.
  int best = 0;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pieces_.size(); ++i) {
    double m = pieces_[i].region.margin(z);
    if (m > best_margin + 1e-15) {
      best_margin = m;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Vec PiecewiseAffineFunction::evaluate(const Vec& z) const {
  const auto& p = pieces_[static_cast<size_t>(locate(z))];
  return p.matrix * z + p.offset;
}

double PiecewiseAffineFunction::evaluate(double z) const {
  if (in_dim_ != 1 || out_dim_ != 1)
    throw DimensionMismatch("evaluate(double): function is not scalar");
  return evaluate(Vec::Constant(1, z))(0);
}

PreimageResult PiecewiseAffineFunction::preimage(const Vec& x,
                                                 double residual_tol,
                                                 double boundary_tol) const {
  if (x.size() != out_dim_)
    throw DimensionMismatch("preimage: point length mismatch");
  PreimageResult res;
  const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (p.region.always_empty()) continue;
    Eigen::JacobiSVD<Mat> svd(p.matrix,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    Index rank = 0;
    for (Index k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()(k) > 1e-9 * std::max(smax, 1.0)) ++rank;

    Vec rhs = x - p.offset;
    if (rank == in_dim_) {
      Vec z = svd.solve(rhs);
      if ((p.matrix * z - rhs).norm() <= residual_tol * scale &&
          p.region.contains(z, boundary_tol)) {
        bool dup = false;
        for (const auto& q : res.points)
          if ((q - z).lpNorm<Eigen::Infinity>() < kDedupTol) {
            dup = true;
            break;
          }
        if (!dup) {
          res.points.push_back(z);
          res.piece_index.push_back(static_cast<int>(i));
        }
      }
    } else {
      // Rank-deficient piece: if x is in its image and the solution set meets
      // the region, the preimage is infinite.
      Vec z0 = rank == 0 ? Vec::Zero(in_dim_) : Vec(svd.solve(rhs));
      if ((p.matrix * z0 - rhs).norm() > residual_tol * scale) continue;
      const Index null_dim = in_dim_ - rank;
      Mat n_basis(in_dim_, null_dim);
      {
        Eigen::JacobiSVD<Mat> full(p.matrix, Eigen::ComputeFullV);
        n_basis = full.matrixV().rightCols(null_dim);
      }
      if (p.region.halfspaces().empty()) {
        res.infinite = true;
        continue;
      }
      Mat c = p.region.constraint_matrix();
      Vec d = p.region.constraint_rhs() - c * z0;
      auto ball = lp::chebyshev_ball(c * n_basis, d + Vec::Constant(d.size(), boundary_tol));
      if (ball.feasible) res.infinite = true;
    }
  }
  return res;
}

bool PiecewiseAffineFunction::is_generic(const Vec& x, double margin_tol) const {
  PreimageResult pre = preimage(x);
  if (pre.infinite) return false;
  for (size_t k = 0; k < pre.points.size(); ++k) {
    const auto& region = pieces_[static_cast<size_t>(pre.piece_index[k])].region;
    if (region.margin(pre.points[k]) <= margin_tol) return false;
  }
  return true;
}

PiecewiseAffineFunction precompose(const PiecewiseAffineFunction& f,
                                   const AffineMap& h) {
  if (h.out_dim() != f.in_dim())
    throw DimensionMismatch("precompose: dimension mismatch");
  std::vector<AffinePiece> pieces;
  pieces.reserve(static_cast<size_t>(f.piece_count()));
  for (const auto& p : f.pieces()) {
    AffinePiece q;
    q.region = Region(h.in_dim());
    for (const auto& hs : p.region.halfspaces())
      q.region.add(h.matrix.transpose() * hs.normal,
                   hs.offset - hs.normal.dot(h.offset));
    q.matrix = p.matrix * h.matrix;
    q.offset = p.matrix * h.offset + p.offset;
    pieces.push_back(std::move(q));
  }
  return PiecewiseAffineFunction(std::move(pieces), h.in_dim(), f.out_dim());
}

double facet_agreement_max_diff(const PiecewiseAffineFunction& f,
                                int samples_per_facet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index m = f.in_dim();
  double worst = 0.0;
  for (int i = 0; i < f.piece_count(); ++i) {
    for (int j = i + 1; j < f.piece_count(); ++j) {
      const auto& pi = f.piece(i);
      const auto& pj = f.piece(j);
      for (const auto& hs : pi.region.halfspaces()) {
        // Parametrize the hyperplane normal.z = offset and intersect both
        // regions inside it.
        Vec p0 = hs.offset * hs.normal;
        Mat basis;
        if (m == 1) {
          basis = Mat::Zero(1, 0);
        } else {
          Eigen::JacobiSVD<Mat> svd(hs.normal.transpose(), Eigen::ComputeFullV);
          basis = svd.matrixV().rightCols(m - 1);
        }
        Mat ci = pi.region.constraint_matrix();
        Vec di = pi.region.constraint_rhs();
        Mat cj = pj.region.constraint_matrix();
        Vec dj = pj.region.constraint_rhs();
        Mat call(ci.rows() + cj.rows(), m);
        call << ci, cj;
        Vec dall(di.size() + dj.size());
        dall << di, dj;
        Vec dt = dall - call * p0;
        if (m == 1) {
          Vec z = p0;
          if (pi.region.contains(z, 1e-9) && pj.region.contains(z, 1e-9)) {
            double diff = ((pi.matrix * z + pi.offset) -
                           (pj.matrix * z + pj.offset))
                              .lpNorm<Eigen::Infinity>();
            worst = std::max(worst, diff);
          }
          continue;
        }
        // Corners and quasi-degenerate intersections are skipped: a shared
        // facet must have a substantive relative interior. The parametrized
        // coordinates are boxed so samples stay near the origin, where the
        // two affine evaluations cancel cleanly.
        Mat csys(dt.size() + 2 * (m - 1), m - 1);
        Vec dsys(dt.size() + 2 * (m - 1));
        csys.topRows(dt.size()) = call * basis;
        dsys.head(dt.size()) = dt;
        csys.bottomRows(2 * (m - 1)) << Mat::Identity(m - 1, m - 1),
            -Mat::Identity(m - 1, m - 1);
        dsys.tail(2 * (m - 1)).setConstant(10.0);
        auto ball = lp::chebyshev_ball(csys, dsys);
        if (!ball.feasible || ball.radius < 1e-6) continue;
        for (int s = 0; s < samples_per_facet; ++s) {
          Vec t = Vec::NullaryExpr(m - 1, [&](Index) { return gauss(rng); });
          if (t.norm() > 0) t *= (ball.radius * 0.9 / t.norm());
          Vec z = p0 + basis * (ball.center + t);
          double diff = ((pi.matrix * z + pi.offset) -
                         (pj.matrix * z + pj.offset))
                            .lpNorm<Eigen::Infinity>();
          worst = std::max(worst, diff);
        }
      }
    }
  }
  return worst;
}

double cover_violation(const PiecewiseAffineFunction& f, int n_samples,
                       double box_halfwidth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-box_halfwidth, box_halfwidth);
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Vec z = Vec::NullaryExpr(f.in_dim(), [&](Index) { return unif(rng); });
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : f.pieces())
      best = std::max(best, p.region.margin(z));
    worst = std::max(worst, -std::min(best, 0.0));
  }
  return worst;
}

std::pair<Vec, Vec> image_bounds(const PiecewiseAffineFunction& f,
                                 const Vec& z_lo, const Vec& z_hi,
                                 int grid_per_axis) {
  const Index m = f.in_dim();
  Vec lo = Vec::Constant(f.out_dim(), std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(f.out_dim(), -std::numeric_limits<double>::infinity());
  auto absorb = [&](const Vec& z) {
    Vec v = f.evaluate(z);
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  };
  if (m == 1) {
    absorb(Vec::Constant(1, z_lo(0)));
    absorb(Vec::Constant(1, z_hi(0)));
    for (const auto& p : f.pieces()) {
      auto [a, b] = p.region.interval();
      for (double edge : {a, b})
        if (std::isfinite(edge) && edge >= z_lo(0) && edge <= z_hi(0))
          absorb(Vec::Constant(1, edge));
    }
    for (int g = 0; g <= grid_per_axis; ++g)
      absorb(Vec::Constant(1, z_lo(0) + (z_hi(0) - z_lo(0)) * g / grid_per_axis));
    return {lo, hi};
  }
  if (m == 2) {
    Vec z(2);
    for (int gx = 0; gx <= grid_per_axis; ++gx) {
      z(0) = z_lo(0) + (z_hi(0) - z_lo(0)) * gx / grid_per_axis;
      for (int gy = 0; gy <= grid_per_axis; ++gy) {
        z(1) = z_lo(1) + (z_hi(1) - z_lo(1)) * gy / grid_per_axis;
        absorb(z);
      }
    }
    return {lo, hi};
  }
  // Higher dimensions: random probe.
  std::mt19937_64 rng(12345);
  Vec z(m);
  for (int s = 0; s < grid_per_axis * grid_per_axis; ++s) {
    for (Index k = 0; k < m; ++k)
      z(k) = std::uniform_real_distribution<double>(z_lo(k), z_hi(k))(rng);
    absorb(z);
  }
  return {lo, hi};
}

}  // namespace mixident
