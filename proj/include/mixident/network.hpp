#ifndef MIXIDENT_NETWORK_HPP
#define MIXIDENT_NETWORK_HPP

#include <vector>

#include "mixident/injectivity.hpp"
#include "mixident/pwa.hpp"

namespace mixident {

enum class Activation { relu, leaky_relu, identity };

struct Layer {
  Mat weights;  // n_i x n_{i-1}
  Vec bias;     // n_i
  Activation act = Activation::identity;
  double slope = 0.01;  // leaky-ReLU slope, a > 0 and a != 1
};

// Fully connected ReLU / leaky-ReLU MLP with an affine output layer.
struct NetworkSpec {
  std::vector<Layer> layers;

  Index input_dim() const;
  Index output_dim() const;
  int hidden_unit_count() const;
  void validate() const;
};

Vec forward(const NetworkSpec& net, const Vec& z);

// Enumerates feasible activation patterns layer by layer (LP feasibility with
// slack 1e-9, empty-interior patterns discarded) and emits one affine piece
// per pattern. Requires at most 24 hidden units.
PiecewiseAffineFunction compile_network(const NetworkSpec& net,
                                        std::size_t region_cap = 1u << 20);

// Static sufficient conditions only: leaky-ReLU with non-decreasing widths
// and full-column-rank weights is injective; the ReLU analogue is observably
// injective; anything else is unknown.
InjectivityVerdict architecture_check(const NetworkSpec& net);

}  // namespace mixident

#endif
