#include "mixident/injectivity.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mixident/errors.hpp"
#include "mixident/lp.hpp"

namespace mixident {

std::string to_string(InjectivityLevel level) {
  switch (level) {
    case InjectivityLevel::injective:
      return "injective";
    case InjectivityLevel::observably_injective:
      return "observably_injective";
    case InjectivityLevel::weakly_injective:
      return "weakly_injective";
    case InjectivityLevel::not_weakly_injective:
      return "not_weakly_injective";
    default:
      return "unknown";
  }
}

namespace {

constexpr double kWitnessTol = 1e-10;

struct Piece1D {
  double lo, hi;  // region interval
  double a, b;    // slope, intercept
  int index;
  bool constant() const { return std::abs(a) <= 1e-12; }
  double img_lo() const { return std::min(a * lo + b, a * hi + b); }
  double img_hi() const { return std::max(a * lo + b, a * hi + b); }
  bool contains_z(double z) const {
    return z >= lo - 1e-10 && z <= hi + 1e-10;
  }
};

// Number of distinct finite preimages of y among non-constant pieces.
int count_at(const std::vector<Piece1D>& ps, double y) {
  std::vector<double> zs;
  for (const auto& p : ps) {
    if (p.constant()) continue;
    double z = (y - p.b) / p.a;
    if (!p.contains_z(z)) continue;
    bool dup = false;
    for (double q : zs)
      if (std::abs(q - z) < 1e-8) dup = true;
    if (!dup) zs.push_back(z);
  }
  return static_cast<int>(zs.size());
}

std::vector<double> preimages_at(const std::vector<Piece1D>& ps, double y) {
  std::vector<double> zs;
  for (const auto& p : ps) {
    if (p.constant()) continue;
    double z = (y - p.b) / p.a;
    if (!p.contains_z(z)) continue;
    bool dup = false;
    for (double q : zs)
      if (std::abs(q - z) < 1e-8) dup = true;
    if (!dup) zs.push_back(z);
  }
  return zs;
}

double interior_point(const Piece1D& p) {
  if (std::isfinite(p.lo) && std::isfinite(p.hi)) return 0.5 * (p.lo + p.hi);
  if (std::isfinite(p.lo)) return p.lo + 1.0;
  if (std::isfinite(p.hi)) return p.hi - 1.0;
  return 0.0;
}

InjectivityVerdict classify_1d(const PiecewiseAffineFunction& f) {
  InjectivityVerdict v;
  v.method = "exact_1d";
  std::vector<Piece1D> ps;
  for (int i = 0; i < f.piece_count(); ++i) {
    const auto& piece = f.piece(i);
    if (piece.region.always_empty()) continue;
    auto [lo, hi] = piece.region.interval();
    if (!(hi - lo > 1e-12)) continue;  // empty or degenerate interval
    ps.push_back({lo, hi, piece.matrix(0, 0), piece.offset(0), i});
  }
  if (ps.empty()) throw InvalidArgument("classify_injectivity: no usable pieces");

  std::vector<const Piece1D*> atoms;
  std::vector<Piece1D> lines;
  for (const auto& p : ps) {
    if (p.constant())
      atoms.push_back(&p);
    else
      lines.push_back(p);
  }

  if (lines.empty()) {
    // Image is a finite set of atoms: every observable point has an infinite
    // preimage of positive measure.
    v.level = InjectivityLevel::not_weakly_injective;
    double z1 = interior_point(*atoms.front());
    double z2 = z1 - 0.25 * std::min(1.0, z1 - atoms.front()->lo);
    v.witness = {Vec::Constant(1, z1), Vec::Constant(1, z2)};
    v.certificate = "all pieces constant; image is purely atomic";
    return v;
  }

  // Critical values: image endpoints, atom values, and pairwise
  // equal-preimage points.
  std::vector<double> crit;
  for (const auto& p : lines) {
    if (std::isfinite(p.img_lo())) crit.push_back(p.img_lo());
    if (std::isfinite(p.img_hi())) crit.push_back(p.img_hi());
  }
  for (const auto* p : atoms) crit.push_back(p->b);
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      double da = lines[i].a - lines[j].a;
      if (std::abs(da) > 1e-14) {
        // Solves (y - b_i)/a_i = (y - b_j)/a_j.
        double y = (lines[j].b * lines[i].a - lines[i].b * lines[j].a) / da;
        if (std::isfinite(y)) crit.push_back(y);
      }
    }
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             crit.end());

  std::vector<double> probes;
  if (crit.empty()) {
    probes.push_back(0.0);
  } else {
    probes.push_back(crit.front() - 1.0);
    for (size_t i = 0; i + 1 < crit.size(); ++i)
      probes.push_back(0.5 * (crit[i] + crit[i + 1]));
    probes.push_back(crit.back() + 1.0);
  }

  bool has_single = false, has_multi = false;
  double multi_probe = 0.0;
  for (double y : probes) {
    int c = count_at(lines, y);
    if (c == 1) has_single = true;
    if (c >= 2 && !has_multi) {
      has_multi = true;
      multi_probe = y;
    }
  }

  bool f4 = !has_multi && atoms.empty();
  if (f4) {
    for (double y : crit)
      if (count_at(lines, y) > 1) f4 = false;
  }

  std::ostringstream cert;
  cert << "interval analysis over " << lines.size() << " affine pieces, "
       << atoms.size() << " atoms";
  if (f4) {
    v.level = InjectivityLevel::injective;
    v.certificate = cert.str() + "; every image point has a unique preimage";
    return v;
  }
  if (!has_multi) {
    v.level = InjectivityLevel::observably_injective;
    v.certificate = cert.str() +
                    "; multi-preimage set has measure zero in the image";
    return v;
  }
  if (has_single) {
    v.level = InjectivityLevel::weakly_injective;
    v.certificate =
        cert.str() + "; an image interval with unique preimages exists "
                     "alongside a positive-measure multi-preimage set";
    return v;
  }
  v.level = InjectivityLevel::not_weakly_injective;
  auto zs = preimages_at(lines, multi_probe);
  v.witness = {Vec::Constant(1, zs[0]), Vec::Constant(1, zs[1])};
  v.certificate = cert.str() + "; every image interval is multiply covered";
  return v;
}

struct Collision {
  int i, j;
  Vec z1, z2;
  bool full_dim = false;
};

// Refines an approximate collision onto the exact set A_i z1 + b_i = A_j z2 + b_j.
void refine_collision(const PiecewiseAffineFunction& f, Collision& c) {
  const auto& pi = f.piece(c.i);
  const auto& pj = f.piece(c.j);
  Mat m(pi.matrix.rows(), pi.matrix.cols() + pj.matrix.cols());
  m << pi.matrix, -pj.matrix;
  Vec w(c.z1.size() + c.z2.size());
  w << c.z1, c.z2;
  Vec resid = pj.offset - pi.offset - m * w;
  Vec delta = m.completeOrthogonalDecomposition().solve(resid);
  w += delta;
  c.z1 = w.head(c.z1.size());
  c.z2 = w.tail(c.z2.size());
}

std::optional<Collision> pair_collision(const PiecewiseAffineFunction& f, int i,
                                        int j) {
  const auto& pi = f.piece(i);
  const auto& pj = f.piece(j);
  if (pi.region.always_empty() || pj.region.always_empty()) return std::nullopt;
  const Index m = f.in_dim();
  const Index n = f.out_dim();
  Mat ci = pi.region.constraint_matrix();
  Vec di = pi.region.constraint_rhs();
  Mat cj = pj.region.constraint_matrix();
  Vec dj = pj.region.constraint_rhs();

  const Index rows = ci.rows() + cj.rows() + 2 * n + 4 * m;
  Mat a = Mat::Zero(rows, 2 * m);
  Vec b = Vec::Zero(rows);
  Index r = 0;
  for (Index k = 0; k < ci.rows(); ++k, ++r) {
    a.block(r, 0, 1, m) = ci.row(k);
    b(r) = di(k);
  }
  for (Index k = 0; k < cj.rows(); ++k, ++r) {
    a.block(r, m, 1, m) = cj.row(k);
    b(r) = dj(k);
  }
  Vec eq_rhs = pj.offset - pi.offset;
  for (Index k = 0; k < n; ++k) {
    a.block(r, 0, 1, m) = pi.matrix.row(k);
    a.block(r, m, 1, m) = -pj.matrix.row(k);
    b(r) = eq_rhs(k) + 1e-9;
    ++r;
    a.block(r, 0, 1, m) = -pi.matrix.row(k);
    a.block(r, m, 1, m) = pj.matrix.row(k);
    b(r) = -eq_rhs(k) + 1e-9;
    ++r;
  }
  const double big = 1e6;
  for (Index k = 0; k < 2 * m; ++k) {
    a(r, k) = 1.0;
    b(r) = big;
    ++r;
    a(r, k) = -1.0;
    b(r) = big;
    ++r;
  }

  for (Index k = 0; k < m; ++k) {
    for (double sgn : {1.0, -1.0}) {
      Vec c = Vec::Zero(2 * m);
      c(k) = sgn;
      c(m + k) = -sgn;
      auto sol = lp::maximize(c, a, b);
      if (sol.status == lp::Status::optimal && sol.objective > 1e-7) {
        Collision col{i, j, sol.x.head(m), sol.x.tail(m), false};
        refine_collision(f, col);
        if ((col.z1 - col.z2).lpNorm<Eigen::Infinity>() < 1e-8) continue;
        if (!pi.region.contains(col.z1, 1e-7) ||
            !pj.region.contains(col.z2, 1e-7))
          continue;

        // Interior version: positive slack in both regions means the
        // collision set sweeps an open patch of both image sheets. Region
        // interiors are disjoint, so interior solutions have z1 != z2.
        Mat a2 = Mat::Zero(rows + 1, 2 * m + 1);
        a2.block(0, 0, rows, 2 * m) = a;
        Vec b2(rows + 1);
        b2.head(rows) = b;
        for (Index q = 0; q < ci.rows(); ++q) a2(q, 2 * m) = 1.0;
        for (Index q = 0; q < cj.rows(); ++q) a2(ci.rows() + q, 2 * m) = 1.0;
        a2.row(rows).setZero();
        a2(rows, 2 * m) = 1.0;  // t <= 1
        b2(rows) = 1.0;
        Vec c2 = Vec::Zero(2 * m + 1);
        c2(2 * m) = 1.0;
        auto sol2 = lp::maximize(c2, a2, b2);
        bool interior =
            sol2.status == lp::Status::optimal && sol2.objective > 1e-7;
        // The patch has full measure in the image only when both sheets are
        // m-dimensional and coincide locally.
        bool rank_i = numeric_rank(pi.matrix) == m;
        bool rank_j = numeric_rank(pj.matrix) == m;
        bool same_span = true;
        if (n > m) {
          Mat joint(n, 2 * m);
          joint << pi.matrix, pj.matrix;
          same_span = numeric_rank(joint) == m;
        }
        col.full_dim = interior && rank_i && rank_j && same_span;
        return col;
      }
    }
  }
  return std::nullopt;
}

struct ImagePolyhedron {
  Mat c;
  Vec d;
};

// Cells of base \ cut, computed by branching on violated rows of cut.
void subtract(std::vector<ImagePolyhedron>& cells, const ImagePolyhedron& cut,
              size_t cell_cap) {
  std::vector<ImagePolyhedron> out;
  for (const auto& cell : cells) {
    // Does the cut actually meet this cell's interior?
    Mat both(cell.c.rows() + cut.c.rows(), cell.c.cols());
    both << cell.c, cut.c;
    Vec rhs(cell.d.size() + cut.d.size());
    rhs << cell.d, cut.d;
    auto meet = lp::chebyshev_ball(both, rhs);
    if (!meet.feasible || meet.radius < 1e-9) {
      out.push_back(cell);
      continue;
    }
    for (Index r = 0; r < cut.c.rows(); ++r) {
      ImagePolyhedron piece;
      piece.c = Mat(cell.c.rows() + r + 1, cell.c.cols());
      piece.d = Vec(cell.d.size() + r + 1);
      piece.c.topRows(cell.c.rows()) = cell.c;
      piece.d.head(cell.d.size()) = cell.d;
      // Previous rows kept satisfied, row r violated.
      for (Index q = 0; q < r; ++q) {
        piece.c.row(cell.c.rows() + q) = cut.c.row(q);
        piece.d(cell.d.size() + q) = cut.d(q);
      }
      piece.c.row(cell.c.rows() + r) = -cut.c.row(r);
      piece.d(cell.d.size() + r) = -cut.d(r);
      auto ball = lp::chebyshev_ball(piece.c, piece.d);
      if (ball.feasible && ball.radius > 1e-7) out.push_back(std::move(piece));
      if (out.size() > cell_cap) throw Error("cell cap");
    }
  }
  cells = std::move(out);
}

InjectivityVerdict classify_sampling(const PiecewiseAffineFunction& f,
                                     int sample_budget, std::uint64_t seed) {
  InjectivityVerdict v;
  v.method = "sampling";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double spread = 1.0;
  for (const auto& p : f.pieces()) {
    if (p.region.halfspaces().empty()) continue;
    auto ball = lp::chebyshev_ball(p.region.constraint_matrix(),
                                   p.region.constraint_rhs(), 1e3);
    if (ball.feasible)
      spread = std::max(spread, ball.center.lpNorm<Eigen::Infinity>());
  }
  int singles = 0, multis = 0, infinites = 0;
  std::optional<std::pair<Vec, Vec>> witness;
  for (int s = 0; s < sample_budget; ++s) {
    Vec z = Vec::NullaryExpr(f.in_dim(),
                             [&](Index) { return 2.0 * spread * gauss(rng); });
    Vec x = f.evaluate(z);
    auto pre = f.preimage(x);
    if (pre.infinite) {
      ++infinites;
      continue;
    }
    if (pre.points.size() >= 2) {
      ++multis;
      if (!witness) witness = {pre.points[0], pre.points[1]};
    } else {
      ++singles;
    }
  }
  std::ostringstream cert;
  cert << "sampled " << sample_budget << " points: " << singles
       << " unique, " << multis << " colliding, " << infinites
       << " infinite preimages";
  if (multis == 0 && infinites == 0) {
    v.level = InjectivityLevel::observably_injective;
    v.certificate = cert.str() + "; sampling cannot certify full injectivity";
  } else if (singles > 0) {
    v.level = InjectivityLevel::weakly_injective;
    v.certificate = cert.str();
    v.witness = witness;
  } else if (witness) {
    v.level = InjectivityLevel::not_weakly_injective;
    v.certificate = cert.str();
    v.witness = witness;
  } else {
    v.level = InjectivityLevel::unknown;
    v.certificate = cert.str() + "; only infinite preimages sampled";
  }
  return v;
}

InjectivityVerdict classify_exact_pairwise(const PiecewiseAffineFunction& f,
                                           int sample_budget,
                                           std::uint64_t seed) {
  InjectivityVerdict v;
  v.method = "exact_pairwise";
  const Index m = f.in_dim();
  const int np = f.piece_count();

  std::vector<bool> invertible(static_cast<size_t>(np), false);
  bool any_rank_deficient = false;
  bool any_full_rank = false;
  for (int i = 0; i < np; ++i) {
    bool full = numeric_rank(f.piece(i).matrix) == m;
    invertible[static_cast<size_t>(i)] = full && f.in_dim() == f.out_dim();
    if (!full) any_rank_deficient = true;
    if (full) any_full_rank = true;
  }

  if (!any_full_rank) {
    // Every piece collapses dimensions, so every observable point has an
    // infinite preimage.
    for (int i = 0; i < np; ++i) {
      const auto& p = f.piece(i);
      if (p.region.always_empty()) continue;
      lp::ChebyshevBall ball;
      if (p.region.halfspaces().empty()) {
        ball.feasible = true;
        ball.center = Vec::Zero(m);
        ball.radius = 1.0;
      } else {
        ball = lp::chebyshev_ball(p.region.constraint_matrix(),
                                  p.region.constraint_rhs(), 1.0);
      }
      if (!ball.feasible || ball.radius < 1e-7) continue;
      Eigen::JacobiSVD<Mat> svd(p.matrix, Eigen::ComputeFullV);
      Vec dir = svd.matrixV().col(m - 1);
      v.level = InjectivityLevel::not_weakly_injective;
      v.witness = {ball.center, Vec(ball.center + 0.5 * ball.radius * dir)};
      v.certificate = "no piece has full column rank; the image is a "
                      "lower-dimensional set with infinite preimages";
      return v;
    }
  }

  std::vector<Collision> collisions;
  bool any_full_dim = false;
  for (int i = 0; i < np; ++i)
    for (int j = i + 1; j < np; ++j) {
      auto col = pair_collision(f, i, j);
      if (col) {
        collisions.push_back(*col);
        if (col->full_dim) any_full_dim = true;
      }
    }

  std::ostringstream cert;
  cert << np << " pieces, " << collisions.size() << " colliding pairs";

  if (collisions.empty() && !any_rank_deficient) {
    v.level = InjectivityLevel::injective;
    v.certificate = cert.str() + "; no cross-piece collisions and all pieces "
                                 "have full column rank";
    return v;
  }
  if (!any_full_dim) {
    v.level = InjectivityLevel::observably_injective;
    v.certificate =
        cert.str() +
        "; collisions and infinite preimages are confined to measure-zero sets";
    return v;
  }

  // A full-dimensional multi-covered set exists, so the function is at best
  // weakly injective. Search for an image ball covered exactly once.
  if (f.in_dim() == f.out_dim()) {
    std::vector<ImagePolyhedron> images;
    std::vector<int> owners;
    for (int i = 0; i < np; ++i) {
      if (!invertible[static_cast<size_t>(i)]) continue;
      const auto& p = f.piece(i);
      if (p.region.halfspaces().empty()) continue;
      Mat ainv = p.matrix.inverse();
      ImagePolyhedron ip;
      ip.c = p.region.constraint_matrix() * ainv;
      ip.d = p.region.constraint_rhs() + ip.c * p.offset;
      images.push_back(std::move(ip));
      owners.push_back(i);
    }
    try {
      std::mt19937_64 rng(seed + 1);
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (size_t i = 0; i < images.size(); ++i) {
        std::vector<ImagePolyhedron> cells{images[i]};
        for (size_t j = 0; j < images.size() && !cells.empty(); ++j) {
          if (j == i) continue;
          subtract(cells, images[j], 20000);
        }
        for (const auto& cell : cells) {
          auto ball = lp::chebyshev_ball(cell.c, cell.d);
          if (!ball.feasible || ball.radius < 1e-7) continue;
          for (int attempt = 0; attempt < 8; ++attempt) {
            Vec x = ball.center;
            if (attempt > 0) {
              Vec dir = Vec::NullaryExpr(m, [&](Index) { return gauss(rng); });
              if (dir.norm() > 0)
                x += dir * (0.5 * ball.radius * attempt / 8.0 / dir.norm());
            }
            auto pre = f.preimage(x);
            if (!pre.infinite && pre.points.size() == 1) {
              v.level = InjectivityLevel::weakly_injective;
              std::ostringstream c2;
              c2 << cert.str()
                 << "; image ball with unique preimages at radius "
                 << ball.radius;
              v.certificate = c2.str();
              return v;
            }
          }
        }
      }
      v.level = InjectivityLevel::not_weakly_injective;
      for (const auto& col : collisions)
        if (col.full_dim) {
          v.witness = {col.z1, col.z2};
          break;
        }
      v.certificate =
          cert.str() + "; every image region is multiply covered";
      return v;
    } catch (const Error&) {
      // Cell blow-up: fall back to sampling below.
    }
  }
  auto sampled = classify_sampling(f, sample_budget, seed);
  sampled.certificate = cert.str() + "; " + sampled.certificate;
  if (sampled.level == InjectivityLevel::observably_injective) {
    // Pairwise analysis already proved a full-dimensional collision set.
    sampled.level = InjectivityLevel::weakly_injective;
  }
  return sampled;
}

}  // namespace

InjectivityVerdict classify_injectivity(const PiecewiseAffineFunction& f,
                                        int sample_budget, std::uint64_t seed) {
  if (f.in_dim() == 1 && f.out_dim() == 1) return classify_1d(f);
  if (f.piece_count() <= 64) return classify_exact_pairwise(f, sample_budget, seed);
  return classify_sampling(f, sample_budget, seed);
}

int preimage_count_ext(const PiecewiseAffineFunction& f,
                       const GaussianMixture& prior, const Vec& x0,
                       double delta) {
  if (f.in_dim() != f.out_dim())
    throw DimensionMismatch("preimage_count_ext: requires m = n");
  if (prior.dim() != f.in_dim())
    throw DimensionMismatch("preimage_count_ext: prior dimension mismatch");
  if (!(delta > 0.0))
    throw InvalidArgument("preimage_count_ext: delta must be positive");

  auto pre = f.preimage(x0);
  if (pre.infinite)
    throw NotGenericPoint("preimage_count_ext: infinite preimage at x0");
  if (!f.is_generic(x0))
    throw NotGenericPoint("preimage_count_ext: x0 within 1e-9 of a region-image boundary");

  // The locally valid mixture: every piece holding a preimage point
  // contributes the prior pushed through that piece's affine map.
  struct ExtComp {
    double weight;
    Vec mean;
    Mat cov;
  };
  std::vector<ExtComp> ext;
  std::vector<double> inv_abs_det;
  double safe_radius = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < pre.points.size(); ++k) {
    const auto& piece = f.piece(pre.piece_index[k]);
    Eigen::JacobiSVD<Mat> svd(piece.matrix);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    double det = piece.matrix.determinant();
    if (std::abs(det) < 1e-12)
      throw NotGenericPoint("preimage_count_ext: singular piece at a preimage point");
    inv_abs_det.push_back(1.0 / std::abs(det));
    double margin = piece.region.margin(pre.points[k]);
    if (std::isfinite(margin)) safe_radius = std::min(safe_radius, margin * smin);
    for (const auto& comp : prior.components()) {
      ExtComp e;
      e.weight = comp.weight;
      e.mean = piece.matrix * comp.mean + piece.offset;
      e.cov = piece.matrix * comp.cov * piece.matrix.transpose();
      ext.push_back(std::move(e));
    }
  }

  auto ext_density = [&](const Vec& x) {
    double total = 0.0;
    for (const auto& e : ext)
      total += e.weight * gaussian_density(x, e.mean, e.cov);
    return total;
  };
  auto pushforward_at = [&](const Vec& x) -> std::optional<double> {
    auto q = f.preimage(x);
    if (q.infinite) return std::nullopt;
    double total = 0.0;
    for (size_t k = 0; k < q.points.size(); ++k) {
      double det = f.piece(q.piece_index[k]).matrix.determinant();
      if (std::abs(det) < 1e-12) return std::nullopt;
      total += prior.density(q.points[k]) / std::abs(det);
    }
    return total;
  };

  // Validate the analytic continuation against the true pushforward density
  // on a ball around x0.
  if (!pre.points.empty()) {
    double r = std::min(delta, 0.5 * safe_radius);
    std::mt19937_64 rng(0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool validated = false;
    for (int shrink = 0; shrink < 4 && !validated; ++shrink, r *= 0.25) {
      int checked = 0;
      bool ok = true;
      for (int s = 0; s < 8; ++s) {
        Vec dir = Vec::NullaryExpr(f.in_dim(), [&](Index) { return gauss(rng); });
        if (dir.norm() == 0) continue;
        Vec x = x0 + dir * (r / dir.norm());
        auto truth = pushforward_at(x);
        if (!truth) continue;
        ++checked;
        double approx = ext_density(x);
        if (std::abs(approx - *truth) > 1e-8 * std::max({*truth, approx, 1e-12})) {
          ok = false;
          break;
        }
      }
      validated = ok && checked > 0;
    }
    if (!validated)
      throw NotGenericPoint(
          "preimage_count_ext: local mixture does not match the pushforward "
          "density near x0");
  }

  // Each extended component integrates to its weight; the total is the
  // preimage cardinality.
  double total = 0.0;
  for (const auto& e : ext) total += e.weight;
  return static_cast<int>(std::llround(total));
}

}  // namespace mixident
