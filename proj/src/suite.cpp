#include "mixident/suite.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mixident/errors.hpp"
#include "mixident/injectivity.hpp"

namespace mixident {

namespace {

bool near(const Mat& a, const Mat& b, double tol) {
  double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return (a - b).lpNorm<Eigen::Infinity>() <= tol * scale;
}

// Orthogonal factors to try when mapping the whitened frame of p's anchor
// onto q's: Procrustes from the whitened means, eigenbasis alignments of the
// first anisotropic whitened covariance, and a 16-point discretization of
// O(2) (plus signs in one dimension) for the leftover freedom.
std::vector<Mat> orthogonal_candidates(Index m, const std::vector<Vec>& u,
                                       const std::vector<Vec>& v,
                                       const std::vector<Mat>& pw,
                                       const std::vector<Mat>& qw) {
  std::vector<Mat> out;
  auto push = [&](Mat r) {
    for (const auto& existing : out)
      if ((existing - r).lpNorm<Eigen::Infinity>() < 1e-10) return;
    out.push_back(std::move(r));
  };

  if (!u.empty()) {
    Mat cross = Mat::Zero(m, m);
    for (size_t i = 0; i < u.size(); ++i) cross += v[i] * u[i].transpose();
    Eigen::JacobiSVD<Mat> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    push(svd.matrixU() * svd.matrixV().transpose());
    // Reflected completion for rank-deficient cross matrices.
    Mat flip = Mat::Identity(m, m);
    flip(m - 1, m - 1) = -1.0;
    push(svd.matrixU() * flip * svd.matrixV().transpose());
  }
  for (size_t i = 0; i < pw.size(); ++i) {
    if ((pw[i] - Mat::Identity(m, m)).lpNorm<Eigen::Infinity>() < 1e-9) continue;
    Eigen::SelfAdjointEigenSolver<Mat> ep(pw[i]);
    Eigen::SelfAdjointEigenSolver<Mat> eq(qw[i]);
    if (m == 1) break;
    if (m == 2) {
      for (int s0 : {1, -1})
        for (int s1 : {1, -1}) {
          Mat signs = Mat::Identity(2, 2);
          signs(0, 0) = s0;
          signs(1, 1) = s1;
          push(eq.eigenvectors() * signs * ep.eigenvectors().transpose());
        }
    }
    break;
  }
  push(Mat::Identity(m, m));
  if (m == 1) {
    push(Mat::Constant(1, 1, -1.0));
  } else if (m == 2) {
    for (int k = 0; k < 8; ++k) {
      double th = 2.0 * M_PI * k / 8.0;
      Mat rot(2, 2);
      rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      push(rot);
      Mat refl = rot;
      refl.col(1) *= -1.0;
      push(refl);
    }
  }
  return out;
}

}  // namespace

std::vector<AffineMap> all_affine_witnesses(const GaussianMixture& p,
                                            const GaussianMixture& q,
                                            double tolerance) {
  std::vector<AffineMap> found;
  if (p.dim() != q.dim() || p.size() != q.size()) return found;
  const int k = p.size();
  const Index m = p.dim();
  if (k > 8)
    throw TooManyComponents("affine witness search: more than 8 components");

  std::vector<int> tau(static_cast<size_t>(k));
  std::iota(tau.begin(), tau.end(), 0);
  do {
    bool weights_ok = true;
    for (int i = 0; i < k; ++i)
      if (std::abs(p.component(i).weight -
                   q.component(tau[static_cast<size_t>(i)]).weight) >
          std::max(tolerance, 1e-12))
        weights_ok = false;
    if (!weights_ok) continue;

    const auto& a0 = p.component(0);
    const auto& b0 = q.component(tau[0]);
    Mat s_p = psd_sqrt(a0.cov);
    Mat s_q = psd_sqrt(b0.cov);
    Mat s_p_inv = s_p.inverse();
    Mat s_q_inv = s_q.inverse();

    std::vector<Vec> u, v;
    std::vector<Mat> pw, qw;
    for (int i = 1; i < k; ++i) {
      const auto& ai = p.component(i);
      const auto& bi = q.component(tau[static_cast<size_t>(i)]);
      u.push_back(s_p_inv * (ai.mean - a0.mean));
      v.push_back(s_q_inv * (bi.mean - b0.mean));
      pw.push_back(s_p_inv * ai.cov * s_p_inv.transpose());
      qw.push_back(s_q_inv * bi.cov * s_q_inv.transpose());
    }

    for (const auto& r : orthogonal_candidates(m, u, v, pw, qw)) {
      Mat mat = s_q * r * s_p_inv;
      Vec off = b0.mean - mat * a0.mean;
      AffineMap h(mat, off);
      if (!h.invertible()) continue;
      bool ok = true;
      for (int i = 0; i < k && ok; ++i) {
        const auto& ai = p.component(i);
        const auto& bi = q.component(tau[static_cast<size_t>(i)]);
        if (!near(mat * ai.mean + off, bi.mean, tolerance)) ok = false;
        if (!near(mat * ai.cov * mat.transpose(), bi.cov, tolerance)) ok = false;
      }
      if (!ok) continue;
      bool dup = false;
      for (const auto& existing : found)
        if ((existing.matrix - mat).lpNorm<Eigen::Infinity>() < 1e-9 &&
            (existing.offset - off).lpNorm<Eigen::Infinity>() < 1e-9)
          dup = true;
      if (!dup) found.push_back(std::move(h));
    }
  } while (std::next_permutation(tau.begin(), tau.end()));
  return found;
}

std::optional<AffineMap> recover_affine_witness(const GaussianMixture& p,
                                                const GaussianMixture& q,
                                                double tolerance) {
  auto all = all_affine_witnesses(p, q, tolerance);
  if (all.empty()) return std::nullopt;
  return all.front();
}

namespace {

struct Atom {
  double location;
  double mass;
};

std::vector<Atom> collect_atoms_1d(const GenerativeModel& model) {
  std::vector<Atom> atoms;
  for (const auto& piece : model.decoder.pieces()) {
    if (piece.region.always_empty()) continue;
    if (std::abs(piece.matrix(0, 0)) > 1e-12) continue;
    auto [lo, hi] = piece.region.interval();
    if (!(hi > lo)) continue;
    double mass = 0.0;
    for (const auto& comp : model.prior.components()) {
      double s = std::sqrt(comp.cov(0, 0));
      double upper = std::isfinite(hi) ? normal_cdf((hi - comp.mean(0)) / s) : 1.0;
      double lower = std::isfinite(lo) ? normal_cdf((lo - comp.mean(0)) / s) : 0.0;
      mass += comp.weight * (upper - lower);
    }
    bool merged = false;
    for (auto& a : atoms)
      if (std::abs(a.location - piece.offset(0)) < 1e-9) {
        a.mass += mass;
        merged = true;
        break;
      }
    if (!merged) atoms.push_back({piece.offset(0), mass});
  }
  return atoms;
}

}  // namespace

EqualityEvidence verify_pushforward_equality(const GenerativeModel& m1,
                                             const GenerativeModel& m2,
                                             double tolerance,
                                             int grid_points) {
  m1.validate();
  m2.validate();
  if (m1.noise_sigma != 0.0 || m2.noise_sigma != 0.0)
    throw InvalidArgument("verify_pushforward_equality: noiseless models only");
  const Index m = m1.decoder.out_dim();
  if (m != m2.decoder.out_dim())
    throw DimensionMismatch("verify_pushforward_equality: output dims differ");
  if (m > 2)
    throw InvalidArgument("verify_pushforward_equality: supports m in {1, 2}");

  EqualityEvidence ev;
  ev.tolerance = tolerance;

  auto [z1_lo, z1_hi] = m1.prior.envelope(8.0);
  auto [z2_lo, z2_hi] = m2.prior.envelope(8.0);
  auto [img1_lo, img1_hi] = image_bounds(m1.decoder, z1_lo, z1_hi);
  auto [img2_lo, img2_hi] = image_bounds(m2.decoder, z2_lo, z2_hi);
  Vec lo = img1_lo.cwiseMin(img2_lo);
  Vec hi = img1_hi.cwiseMax(img2_hi);

  bool atoms_ok = true;
  std::vector<double> atom_locations;
  if (m == 1) {
    auto a1 = collect_atoms_1d(m1);
    auto a2 = collect_atoms_1d(m2);
    for (const auto& a : a1) atom_locations.push_back(a.location);
    for (const auto& a : a2) atom_locations.push_back(a.location);
    // Atom sets must match one to one within tolerance.
    if (a1.size() != a2.size()) atoms_ok = a1.empty() && a2.empty();
    if (a1.size() == a2.size()) {
      std::sort(a1.begin(), a1.end(),
                [](const Atom& x, const Atom& y) { return x.location < y.location; });
      std::sort(a2.begin(), a2.end(),
                [](const Atom& x, const Atom& y) { return x.location < y.location; });
      for (size_t i = 0; i < a1.size(); ++i)
        if (std::abs(a1[i].location - a2[i].location) > 1e-6 ||
            std::abs(a1[i].mass - a2[i].mass) > tolerance)
          atoms_ok = false;
    }
    if (!a1.empty() || !a2.empty())
      ev.note = "atoms compared by mass separately";
  }

  auto compare_at = [&](const Vec& x) {
    for (double loc : atom_locations)
      if (std::abs(x(0) - loc) < 1e-6) {
        ++ev.points_skipped;
        return;
      }
    if (!m1.decoder.is_generic(x) || !m2.decoder.is_generic(x)) {
      ++ev.points_skipped;
      return;
    }
    double d1 = pushforward_density(m1, x);
    double d2 = pushforward_density(m2, x);
    double diff = std::abs(d1 - d2);
    ev.max_abs_diff = std::max(ev.max_abs_diff, diff);
    double denom = std::max(d1, d2);
    if (denom > 1e-12)
      ev.max_rel_diff = std::max(ev.max_rel_diff, diff / denom);
    ++ev.points_used;
    for (Index t = 0; t < x.size(); ++t) ev.grid.push_back(x(t));
  };

  if (m == 1) {
    for (int i = 0; i < grid_points; ++i) {
      double x = lo(0) + (hi(0) - lo(0)) * (i + 0.5) / grid_points;
      compare_at(Vec::Constant(1, x));
    }
  } else {
    int per_axis = static_cast<int>(std::ceil(std::sqrt(grid_points)));
    Vec x(2);
    for (int i = 0; i < per_axis; ++i) {
      x(0) = lo(0) + (hi(0) - lo(0)) * (i + 0.5) / per_axis;
      for (int j = 0; j < per_axis; ++j) {
        x(1) = lo(1) + (hi(1) - lo(1)) * (j + 0.5) / per_axis;
        compare_at(x);
      }
    }
  }

  ev.equal = atoms_ok && ev.max_abs_diff < tolerance && ev.points_used > 0;
  if (!atoms_ok) ev.note += (ev.note.empty() ? "" : "; ") + std::string("atom mismatch");
  return ev;
}

bool verify_npmix_theorem(const GenerativeModel& m1, const GenerativeModel& m2) {
  auto c1 = classify_injectivity(m1.decoder);
  auto c2 = classify_injectivity(m2.decoder);
  auto weakly_or_better = [](const InjectivityVerdict& v) {
    return v.level == InjectivityLevel::injective ||
           v.level == InjectivityLevel::observably_injective ||
           v.level == InjectivityLevel::weakly_injective;
  };
  if (!weakly_or_better(c1))
    throw PrerequisiteViolated(
        "verify_npmix_theorem: first decoder is " + to_string(c1.level));
  if (!weakly_or_better(c2))
    throw PrerequisiteViolated(
        "verify_npmix_theorem: second decoder is " + to_string(c2.level));

  EqualityEvidence ev = verify_pushforward_equality(m1, m2, 1e-8);
  if (!ev.equal) return true;  // distinct pushforwards: nothing to refute
  return recover_affine_witness(m1.prior, m2.prior, 1e-6).has_value();
}

std::pair<GaussianMixture, RecoveryReport> end_to_end_recovery(
    const GenerativeModel& observed,
    const std::optional<LatentStructure>& structure) {
  observed.validate();
  if (observed.noise_sigma != 0.0)
    throw InvalidArgument("end_to_end_recovery: noiseless models only");

  // Oracle for the observed mixture: pull the prior through the first
  // invertible piece of the decoder.
  const Index m = observed.decoder.in_dim();
  int oracle_piece = -1;
  for (int i = 0; i < observed.decoder.piece_count(); ++i) {
    const auto& piece = observed.decoder.piece(i);
    if (piece.region.always_empty()) continue;
    if (numeric_rank(piece.matrix) == m &&
        condition_number(piece.matrix) < 1e12) {
      oracle_piece = i;
      break;
    }
  }
  if (oracle_piece < 0)
    throw PrerequisiteViolated(
        "end_to_end_recovery: decoder has no invertible piece");
  const auto& piece = observed.decoder.piece(oracle_piece);
  GaussianMixture observable =
      affine_pushforward(observed.prior, AffineMap(piece.matrix, piece.offset));

  RecoveryReport report;
  report.notes.push_back("oracle piece index " + std::to_string(oracle_piece));

  GaussianMixture recovered = observable;
  try {
    auto [rec, unmix] = recover_latent(observable);
    recovered = rec;
    (void)unmix;
  } catch (const RepeatedSingularValues& e) {
    throw AssumptionViolated(std::string("stage=unmixing: ") + e.what());
  } catch (const NoValidPair& e) {
    throw AssumptionViolated(std::string("stage=unmixing: ") + e.what());
  } catch (const AssumptionViolated& e) {
    throw AssumptionViolated(std::string("stage=unmixing: ") + e.what());
  }

  try {
    auto [pair, margin] = check_ratio_assumption(recovered);
    (void)pair;
    report.ratio_margin = margin;
    report.ratio_ok = true;
  } catch (const Error& e) {
    report.ratio_ok = false;
    report.notes.push_back(std::string("ratio check: ") + e.what());
  }

  if (structure) {
    structure->validate(observed.prior.size());
    report.positivity = "holds";
    report.subset_ok = check_subset_condition(*structure);
    report.nondegeneracy =
        "unchecked (existential over all subsets; no decision procedure)";
  }
  return {recovered, report};
}

}  // namespace mixident
