#include "mixident/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "mixident/errors.hpp"

namespace mixident {
namespace quadrature {

namespace {

// Newton iteration on Legendre polynomials (classic gauleg).
std::pair<Vec, Vec> compute_gauss_legendre(int n) {
  Vec x(n), w(n);
  const double eps = 1e-15;
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double z1, pp;
    do {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      z1 = z;
      z = z1 - p1 / pp;
    } while (std::abs(z - z1) > eps);
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = 2.0 / ((1.0 - z * z) * pp * pp);
    w(n - 1 - i) = w(i);
  }
  return {x, w};
}

}  // namespace

const std::pair<Vec, Vec>& gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: order must be positive");
  static std::map<int, std::pair<Vec, Vec>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

double integrate_1d(const std::function<double(double)>& f, double lo,
                    double hi, int panels, int nodes) {
  if (!(hi > lo)) return 0.0;
  const auto& [xs, ws] = gauss_legendre(nodes);
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    const double mid = a + 0.5 * h, half = 0.5 * h;
    double acc = 0.0;
    for (int q = 0; q < nodes; ++q) acc += ws(q) * f(mid + half * xs(q));
    total += half * acc;
  }
  return total;
}

double integrate_2d(const std::function<double(const Vec&)>& f, const Vec& lo,
                    const Vec& hi, int panels_per_axis, int nodes) {
  if (lo.size() != 2 || hi.size() != 2)
    throw DimensionMismatch("integrate_2d: expects 2-d bounds");
  const auto& [xs, ws] = gauss_legendre(nodes);
  const double hx = (hi(0) - lo(0)) / panels_per_axis;
  const double hy = (hi(1) - lo(1)) / panels_per_axis;
  double total = 0.0;
  Vec pt(2);
  for (int px = 0; px < panels_per_axis; ++px) {
    const double midx = lo(0) + (px + 0.5) * hx;
    for (int py = 0; py < panels_per_axis; ++py) {
      const double midy = lo(1) + (py + 0.5) * hy;
      double acc = 0.0;
      for (int qx = 0; qx < nodes; ++qx) {
        pt(0) = midx + 0.5 * hx * xs(qx);
        double row = 0.0;
        for (int qy = 0; qy < nodes; ++qy) {
          pt(1) = midy + 0.5 * hy * xs(qy);
          row += ws(qy) * f(pt);
        }
        acc += ws(qx) * row;
      }
      total += 0.25 * hx * hy * acc;
    }
  }
  return total;
}

int panels_for(double lo, double hi, double target_width, int min_panels,
               int max_panels) {
  if (!(hi > lo) || !(target_width > 0.0)) return min_panels;
  int p = static_cast<int>(std::ceil((hi - lo) / target_width));
  return std::clamp(p, min_panels, max_panels);
}

}  // namespace quadrature
}  // namespace mixident
