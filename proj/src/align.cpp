#include "mixident/align.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "mixident/errors.hpp"

namespace mixident {

namespace {

Vec column_mean(const Mat& x) { return x.colwise().mean().transpose(); }

Mat centered(const Mat& x) {
  return x.rowwise() - x.colwise().mean();
}

Mat covariance(const Mat& xc, const Mat& yc) {
  return xc.transpose() * yc / static_cast<double>(xc.rows() - 1);
}

Mat inv_sqrt_spd(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s));
  Vec lam = es.eigenvalues();
  if (lam.minCoeff() <= 1e-12 * std::max(lam.maxCoeff(), 1e-30))
    throw SingularCovariance("cca_align: sample covariance is singular");
  return es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Mat sqrt_spd(const Mat& s) { return psd_sqrt(s); }

// Column-wise average ranks with ties shared.
Mat rank_transform(const Mat& x) {
  Mat out(x.rows(), x.cols());
  const Index n = x.rows();
  std::vector<Index> idx(static_cast<size_t>(n));
  for (Index c = 0; c < x.cols(); ++c) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](Index a, Index b) { return x(a, c) < x(b, c); });
    Index i = 0;
    while (i < n) {
      Index j = i;
      while (j + 1 < n && x(idx[static_cast<size_t>(j + 1)], c) ==
                              x(idx[static_cast<size_t>(i)], c))
        ++j;
      double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (Index t = i; t <= j; ++t) out(idx[static_cast<size_t>(t)], c) = avg;
      i = j + 1;
    }
  }
  return out;
}

// Max-weight assignment: exhaustive for small m, Hungarian beyond.
std::vector<int> max_weight_assignment(const Mat& w) {
  const int n = static_cast<int>(w.rows());
  if (n <= 8) {
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_score = -std::numeric_limits<double>::infinity();
    do {
      double score = 0.0;
      for (int r = 0; r < n; ++r) score += w(r, perm[static_cast<size_t>(r)]);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Hungarian algorithm on costs = -weights (row/column potentials with
  // augmenting paths).
  const int inf_guard = n + 1;
  std::vector<double> u(static_cast<size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<size_t>(n + 1), 0.0);
  std::vector<int> way(static_cast<size_t>(n + 1), 0);
  std::vector<int> match(static_cast<size_t>(n + 1), 0);  // col -> row
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n + 1),
                             std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<size_t>(n + 1), false);
    int guard = 0;
    do {
      used[static_cast<size_t>(j0)] = true;
      int i0 = match[static_cast<size_t>(j0)], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cur = -w(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                     v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0 && ++guard < inf_guard * n);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(static_cast<size_t>(n), 0);
  for (int j = 1; j <= n; ++j) out[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
  return out;
}

Mat abs_correlation_matrix(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows())
    throw DimensionMismatch("correlation: row counts differ");
  Mat xc = centered(x), yc = centered(y);
  Vec sx = (xc.colwise().squaredNorm() / (x.rows() - 1.0)).cwiseSqrt();
  Vec sy = (yc.colwise().squaredNorm() / (y.rows() - 1.0)).cwiseSqrt();
  double scale = std::max(1.0, std::max(sx.maxCoeff(), sy.maxCoeff()));
  if (sx.minCoeff() < 1e-12 * scale || sy.minCoeff() < 1e-12 * scale)
    throw ZeroVarianceCoordinate("correlation: a coordinate has no variance");
  Mat c = covariance(xc, yc);
  return (sx.cwiseInverse().asDiagonal() * c * sy.cwiseInverse().asDiagonal())
      .cwiseAbs();
}

void enumerate_pairings(int k_small, int k_large,
                        const std::function<void(const std::vector<int>&)>& fn) {
  // Injections from the smaller component set into the larger.
  std::vector<int> chosen;
  std::vector<bool> used(static_cast<size_t>(k_large), false);
  std::function<void()> rec = [&]() {
    if (static_cast<int>(chosen.size()) == k_small) {
      fn(chosen);
      return;
    }
    for (int j = 0; j < k_large; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      used[static_cast<size_t>(j)] = true;
      chosen.push_back(j);
      rec();
      chosen.pop_back();
      used[static_cast<size_t>(j)] = false;
    }
  };
  rec();
}

}  // namespace

double delta_l2(const GaussianMixture& p, const GaussianMixture& q) {
  if (p.dim() != q.dim())
    throw DimensionMismatch("delta_l2: mixtures of different dimension");
  double pp = l2_inner(p, p);
  double qq = l2_inner(q, q);
  double pq = l2_inner(p, q);
  double dist = std::sqrt(std::max(0.0, pp - 2.0 * pq + qq));
  return dist / (std::pow(pp, 0.25) * std::pow(qq, 0.25));
}

MeanMatchResult mean_match_affine(const Mat& src_means, const Mat& dst_means) {
  if (src_means.rows() != dst_means.rows() ||
      src_means.cols() != dst_means.cols())
    throw DimensionMismatch("mean_match_affine: mean matrices must align");
  const Index k = src_means.rows(), m = src_means.cols();
  Mat x(k, m + 1);
  x << src_means, Vec::Ones(k);
  MeanMatchResult result;
  result.rank_deficient = numeric_rank(x) < m + 1;
  Mat beta = x.completeOrthogonalDecomposition().solve(dst_means);
  result.map = AffineMap(beta.topRows(m).transpose(),
                         beta.row(m).transpose());
  return result;
}

std::pair<double, AlignmentReport> dist_aff_l2(const GaussianMixture& p,
                                               const GaussianMixture& q) {
  if (p.dim() != q.dim())
    throw DimensionMismatch("dist_aff_l2: mixtures of different dimension");
  const int kp = p.size(), kq = q.size();
  if (kp > 10 || kq > 10)
    throw TooManyComponents("dist_aff_l2: more than 10 components");

  Mat p_means(kp, p.dim()), q_means(kq, q.dim());
  for (int j = 0; j < kp; ++j) p_means.row(j) = p.component(j).mean.transpose();
  for (int j = 0; j < kq; ++j) q_means.row(j) = q.component(j).mean.transpose();

  AlignmentReport best;
  best.method = "mean_matching";
  double best_value = std::numeric_limits<double>::infinity();

  auto consider = [&](const std::vector<int>& pairing, const Mat& src,
                      const Mat& dst, bool small_is_p) {
    MeanMatchResult mm = mean_match_affine(src, dst);
    double value;
    try {
      value = delta_l2(affine_pushforward(p, mm.map), q);
    } catch (const DegenerateCovariance&) {
      return;  // singular candidate map cannot push the mixture forward
    } catch (const NotInvertible&) {
      return;
    }
    if (value < best_value - 1e-15) {
      best_value = value;
      best.map = mm.map;
      best.permutation = pairing;
      best.rank_deficient = mm.rank_deficient;
      best.score = value;
      (void)small_is_p;
    }
  };

  if (kp <= kq) {
    enumerate_pairings(kp, kq, [&](const std::vector<int>& sel) {
      Mat dst(kp, q.dim());
      for (int r = 0; r < kp; ++r) dst.row(r) = q_means.row(sel[static_cast<size_t>(r)]);
      consider(sel, p_means, dst, true);
    });
  } else {
    enumerate_pairings(kq, kp, [&](const std::vector<int>& sel) {
      Mat src(kq, p.dim());
      for (int r = 0; r < kq; ++r) src.row(r) = p_means.row(sel[static_cast<size_t>(r)]);
      consider(sel, src, q_means, false);
    });
  }
  // Identity fallback: covers degenerate mean configurations where every
  // mean-matching candidate is singular.
  double ident = delta_l2(p, q);
  if (ident < best_value - 1e-15) {
    best_value = ident;
    best.map = AffineMap::identity(p.dim());
    best.permutation.clear();
    best.rank_deficient = false;
    best.score = ident;
  }
  return {best_value, best};
}

AlignmentReport cca_align(const LatentSample& a, const LatentSample& b,
                          int dim) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("cca_align: samples of different dimension");
  if (a.rows() != b.rows())
    throw DimensionMismatch("cca_align: samples must be paired row for row");
  const Index m = a.dim();
  if (dim < 1 || dim > m) throw InvalidArgument("cca_align: dim must be in [1, m]");
  if (a.rows() < m + 1)
    throw InvalidArgument("cca_align: needs at least m + 1 paired rows");

  Mat ac = centered(a.values), bc = centered(b.values);
  Mat saa = covariance(ac, ac), sbb = covariance(bc, bc);
  Mat sab = covariance(ac, bc);
  Mat wa = inv_sqrt_spd(saa);
  Mat wb_inv_sqrt = inv_sqrt_spd(sbb);
  Mat t = wa * sab * wb_inv_sqrt;
  Eigen::JacobiSVD<Mat> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);

  Mat map = sqrt_spd(sbb) * svd.matrixV() * svd.matrixU().transpose() * wa;
  Vec mu_a = column_mean(a.values), mu_b = column_mean(b.values);

  AlignmentReport report;
  report.method = "cca";
  report.map = AffineMap(map, mu_b - map * mu_a);
  report.canonical_correlations = svd.singularValues().head(dim);
  report.score = report.canonical_correlations.mean();
  return report;
}

double matched_abs_correlation_mean(const Mat& x, const Mat& y,
                                    CorrelationKind corr) {
  Mat xx = corr == CorrelationKind::spearman ? rank_transform(x) : x;
  Mat yy = corr == CorrelationKind::spearman ? rank_transform(y) : y;
  Mat c = abs_correlation_matrix(xx, yy);
  auto assign = max_weight_assignment(c);
  double total = 0.0;
  for (size_t r = 0; r < assign.size(); ++r)
    total += c(static_cast<Index>(r), assign[r]);
  return total / static_cast<double>(assign.size());
}

double mcc(const LatentSample& a, const LatentSample& b, MccMode mode,
           int cca_dim, CorrelationKind corr) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("mcc: samples of different dimension");
  if (a.rows() != b.rows())
    throw DimensionMismatch("mcc: samples must be paired");
  if (mode == MccMode::strong)
    return matched_abs_correlation_mean(a.values, b.values, corr);

  if (a.rows() < 200)
    throw InvalidArgument("mcc: out-of-sample protocol needs at least 200 rows");
  const Index half = a.rows() / 2;
  LatentSample a_fit{a.values.topRows(half), a.run_id, a.source};
  LatentSample b_fit{b.values.topRows(half), b.run_id, b.source};
  int dim = cca_dim < 0 ? static_cast<int>(a.dim()) : cca_dim;
  AlignmentReport align = cca_align(a_fit, b_fit, dim);

  Mat a_hold = a.values.bottomRows(a.rows() - half);
  Mat b_hold = b.values.bottomRows(b.rows() - half);
  Mat mapped(a_hold.rows(), a_hold.cols());
  for (Index r = 0; r < a_hold.rows(); ++r)
    mapped.row(r) = align.map(Vec(a_hold.row(r).transpose())).transpose();
  return matched_abs_correlation_mean(mapped, b_hold, corr);
}

LatentSample ingest_latents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw ParseError(path + ": empty file");

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };

  auto header = split(line);
  const Index m = static_cast<Index>(header.size());
  if (m == 0) throw ParseError(path + ": no columns in header");

  std::vector<Vec> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (static_cast<Index>(cells.size()) != m)
      throw ParseError(path + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(m));
    Vec row(m);
    for (Index c = 0; c < m; ++c) {
      try {
        size_t used = 0;
        row(c) = std::stod(cells[static_cast<size_t>(c)], &used);
        if (used != cells[static_cast<size_t>(c)].size())
          throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError(path + ": line " + std::to_string(line_no) +
                         ": cannot parse '" + cells[static_cast<size_t>(c)] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  LatentSample sample;
  sample.values = Mat(static_cast<Index>(rows.size()), m);
  for (size_t r = 0; r < rows.size(); ++r)
    sample.values.row(static_cast<Index>(r)) = rows[r].transpose();
  sample.run_id = std::filesystem::path(path).stem().string();
  sample.source = path;
  return sample;
}

}  // namespace mixident
