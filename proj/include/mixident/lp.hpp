#ifndef MIXIDENT_LP_HPP
#define MIXIDENT_LP_HPP

#include "mixident/linalg.hpp"

namespace mixident {
namespace lp {

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status;
  Vec x;
  double objective = 0.0;
};

// Maximize c.dot(x) subject to A x <= b with x free. Dense two-phase simplex
// with Bland's rule; intended for the small systems that arise from
// activation-pattern regions (tens of rows and columns).
Solution maximize(const Vec& c, const Mat& A, const Vec& b);

struct ChebyshevBall {
  bool feasible = false;
  Vec center;
  double radius = 0.0;  // largest inscribed-ball radius, capped
};

// Largest ball inscribed in {z : C z <= d}. Rows need not be normalized.
// Radius is capped so unbounded regions report radius_cap.
ChebyshevBall chebyshev_ball(const Mat& C, const Vec& d,
                             double radius_cap = 1e6);

}  // namespace lp
}  // namespace mixident

#endif
