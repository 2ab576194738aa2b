#include "mixident/datasets.hpp"

#include <Eigen/QR>
#include <cmath>
#include <random>

#include "mixident/errors.hpp"

namespace mixident {

namespace {

void check_common(const DatasetSpec& spec) {
  if (spec.n_samples < 1) throw InvalidArgument("dataset: n_samples must be >= 1");
  if (spec.n_clusters < 1) throw InvalidArgument("dataset: n_clusters must be >= 1");
  if (spec.noise < 0.0) throw InvalidArgument("dataset: negative noise");
}

}  // namespace

LabeledData gen_pinwheel(const DatasetSpec& spec) {
  check_common(spec);
  if (spec.kind != DatasetSpec::Kind::pinwheel)
    throw InvalidArgument("gen_pinwheel: spec kind mismatch");
  if (spec.ambient_dim != 2)
    throw InvalidArgument("gen_pinwheel: ambient dimension must be 2");

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> arm(0, spec.n_clusters - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  LabeledData data;
  data.points = Mat(spec.n_samples, 2);
  data.labels.resize(static_cast<size_t>(spec.n_samples));
  for (int i = 0; i < spec.n_samples; ++i) {
    int a = arm(rng);
    double r = 1.0 + spec.radial_std * gauss(rng);
    double t = spec.tangential_std * gauss(rng);
    double angle = 2.0 * M_PI * a / spec.n_clusters + spec.warp_rate * r;
    double c = std::cos(angle), s = std::sin(angle);
    data.points(i, 0) = c * r - s * t;
    data.points(i, 1) = s * r + c * t;
    data.labels[static_cast<size_t>(i)] = a;
  }
  return data;
}

LabeledData gen_parallelograms(const DatasetSpec& spec,
                               std::vector<Parallelogram>* shapes_out) {
  check_common(spec);
  if (spec.kind != DatasetSpec::Kind::parallelograms)
    throw InvalidArgument("gen_parallelograms: spec kind mismatch");
  if (spec.ambient_dim < 2)
    throw InvalidArgument("gen_parallelograms: ambient dimension must be >= 2");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> center_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> len_dist(0.5, 2.0);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Parallelogram> shapes;
  for (int c = 0; c < spec.n_clusters; ++c) {
    Parallelogram p;
    p.center << center_dist(rng), center_dist(rng);
    for (;;) {
      double a1 = angle_dist(rng), a2 = angle_dist(rng);
      p.e1 = len_dist(rng) * Eigen::Vector2d(std::cos(a1), std::sin(a1));
      p.e2 = len_dist(rng) * Eigen::Vector2d(std::cos(a2), std::sin(a2));
      if (std::abs(std::sin(a1 - a2)) > 0.2) break;  // non-degenerate
    }
    shapes.push_back(p);
  }
  if (shapes_out) *shapes_out = shapes;

  // Optional embedding of the plane into a higher ambient dimension by a
  // random full-column-rank affine map.
  Mat embed = Mat::Identity(spec.ambient_dim, 2);
  Vec shift = Vec::Zero(spec.ambient_dim);
  if (spec.ambient_dim > 2) {
    Mat g = Mat::NullaryExpr(spec.ambient_dim, 2,
                             [&](Index, Index) { return gauss(rng); });
    Eigen::HouseholderQR<Mat> qr(g);
    embed = Mat(qr.householderQ()).leftCols(2);
    shift = Vec::NullaryExpr(spec.ambient_dim, [&](Index) { return gauss(rng); });
  }

  std::uniform_int_distribution<int> pick(0, spec.n_clusters - 1);
  LabeledData data;
  data.points = Mat(spec.n_samples, spec.ambient_dim);
  data.labels.resize(static_cast<size_t>(spec.n_samples));
  for (int i = 0; i < spec.n_samples; ++i) {
    int c = pick(rng);
    const auto& p = shapes[static_cast<size_t>(c)];
    Eigen::Vector2d plane = p.center + unit(rng) * p.e1 + unit(rng) * p.e2;
    Vec x = embed * plane + shift;
    for (Index d = 0; d < spec.ambient_dim; ++d)
      x(d) += spec.noise * gauss(rng);
    data.points.row(i) = x.transpose();
    data.labels[static_cast<size_t>(i)] = c;
  }
  return data;
}

}  // namespace mixident
