#ifndef MIXIDENT_PWA_HPP
#define MIXIDENT_PWA_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "mixident/affine.hpp"
#include "mixident/linalg.hpp"

namespace mixident {

// Half-space {z : normal . z <= offset}; normals kept at unit 2-norm so the
// slack (offset - normal . z) is a distance.
struct HalfSpace {
  Vec normal;
  double offset;
};

class Region {
 public:
  Region() = default;
  explicit Region(Index dim) : dim_(dim) {}

  Index dim() const { return dim_; }
  const std::vector<HalfSpace>& halfspaces() const { return halves_; }
  bool always_empty() const { return always_empty_; }

  // Adds normal . z <= offset. Near-zero normals are resolved to either a
  // vacuous constraint or an always-empty marker.
  void add(Vec normal, double offset);

  bool contains(const Vec& z, double tol = 1e-10) const;
  // Smallest slack over all half-spaces; +inf for an unconstrained region.
  double margin(const Vec& z) const;

  Mat constraint_matrix() const;
  Vec constraint_rhs() const;

  // 1-d regions reduce to an interval [lo, hi] (+-inf when unbounded).
  std::pair<double, double> interval() const;

 private:
  Index dim_ = 0;
  std::vector<HalfSpace> halves_;
  bool always_empty_ = false;
};

struct AffinePiece {
  Region region;
  Mat matrix;  // n x m
  Vec offset;  // n
};

struct PreimageResult {
  std::vector<Vec> points;
  std::vector<int> piece_index;  // piece that produced each point
  bool infinite = false;
};

// Explicit polyhedral decomposition with one affine map per region. Region
// interiors are pairwise disjoint and closures cover R^m; adjoining pieces
// agree on shared facets.
class PiecewiseAffineFunction {
 public:
  PiecewiseAffineFunction() = default;
  PiecewiseAffineFunction(std::vector<AffinePiece> pieces, Index in_dim,
                          Index out_dim);

  static PiecewiseAffineFunction single_piece(Mat a, Vec b);

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  int piece_count() const { return static_cast<int>(pieces_.size()); }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  const AffinePiece& piece(int i) const { return pieces_[static_cast<size_t>(i)]; }

  // Index of the containing region; ties break to the lowest piece index and
  // out-of-tolerance points fall back to the least-violated region.
  int locate(const Vec& z, double tol = 1e-10) const;

  Vec evaluate(const Vec& z) const;
  double evaluate(double z) const;  // 1-d convenience

  PreimageResult preimage(const Vec& x, double residual_tol = 1e-9,
                          double boundary_tol = 1e-10) const;

  // True iff the preimage is finite and every preimage point sits strictly
  // inside its region (margin above tol).
  bool is_generic(const Vec& x, double margin_tol = 1e-9) const;

 private:
  std::vector<AffinePiece> pieces_;
  Index in_dim_ = 0;
  Index out_dim_ = 0;
};

// g(z) = f(h(z)). Regions are pulled back through h, maps composed.
PiecewiseAffineFunction precompose(const PiecewiseAffineFunction& f,
                                   const AffineMap& h);

// Largest |f_i - f_j| over sampled points of shared facets; verifies the
// continuity invariant of a decomposition.
double facet_agreement_max_diff(const PiecewiseAffineFunction& f,
                                int samples_per_facet, std::uint64_t seed);

// Largest containment violation of random points against the best region;
// verifies that region closures cover the sampled box.
double cover_violation(const PiecewiseAffineFunction& f, int n_samples,
                       double box_halfwidth, std::uint64_t seed);

// Per-output-coordinate [lo, hi] of f over the box [z_lo, z_hi], evaluated on
// a grid (plus 1-d breakpoints, making the 1-d case exact).
std::pair<Vec, Vec> image_bounds(const PiecewiseAffineFunction& f,
                                 const Vec& z_lo, const Vec& z_hi,
                                 int grid_per_axis = 256);

}  // namespace mixident

#endif
