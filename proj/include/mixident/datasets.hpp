#ifndef MIXIDENT_DATASETS_HPP
#define MIXIDENT_DATASETS_HPP

#include <cstdint>
#include <vector>

#include "mixident/linalg.hpp"

namespace mixident {

struct DatasetSpec {
  enum class Kind { pinwheel, parallelograms };
  Kind kind = Kind::pinwheel;
  int n_samples = 5000;
  int n_clusters = 3;
  double noise = 0.05;
  int ambient_dim = 2;
  std::uint64_t seed = 0;
  // Pinwheel shape parameters.
  double radial_std = 0.3;
  double tangential_std = 0.05;
  double warp_rate = 0.25;  // radians per unit radius
};

struct LabeledData {
  Mat points;               // n_samples x ambient_dim
  std::vector<int> labels;  // cluster per row
};

struct Parallelogram {
  Eigen::Vector2d center, e1, e2;
};

// Spiral arms: radial Gaussian draws warped by an angle proportional to the
// radius, one rotation per arm.
LabeledData gen_pinwheel(const DatasetSpec& spec);

// Uniform draws from seeded random parallelograms with ambient Gaussian
// noise; ambient_dim > 2 embeds the plane by a random full-column-rank
// affine map. The sampled shapes are reported through `shapes` when given.
LabeledData gen_parallelograms(const DatasetSpec& spec,
                               std::vector<Parallelogram>* shapes = nullptr);

}  // namespace mixident

#endif
