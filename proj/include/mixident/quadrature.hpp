#ifndef MIXIDENT_QUADRATURE_HPP
#define MIXIDENT_QUADRATURE_HPP

#include <functional>
#include <utility>

#include "mixident/linalg.hpp"

namespace mixident {
namespace quadrature {

// Gauss-Legendre nodes and weights on [-1, 1]. Cached per order.
const std::pair<Vec, Vec>& gauss_legendre(int n);

// Composite Gauss-Legendre over [lo, hi] split into `panels` equal panels,
// `nodes` points per panel.
double integrate_1d(const std::function<double(double)>& f, double lo,
                    double hi, int panels, int nodes = 64);

// Tensor-product composite rule over an axis-aligned box in R^2.
double integrate_2d(const std::function<double(const Vec&)>& f, const Vec& lo,
                    const Vec& hi, int panels_per_axis, int nodes = 64);

// Panel count so that panel width is at most `target_width`, clamped.
int panels_for(double lo, double hi, double target_width, int min_panels = 4,
               int max_panels = 64);

}  // namespace quadrature
}  // namespace mixident

#endif
