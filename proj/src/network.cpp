#include "mixident/network.hpp"

#include <cmath>

#include "mixident/errors.hpp"
#include "mixident/lp.hpp"

namespace mixident {

namespace {
constexpr double kFeasibilitySlack = 1e-9;
constexpr int kHiddenUnitCap = 24;
constexpr double kConstantRowTol = 1e-13;
}  // namespace

Index NetworkSpec::input_dim() const {
  if (layers.empty()) throw InvalidArgument("NetworkSpec: no layers");
  return layers.front().weights.cols();
}

Index NetworkSpec::output_dim() const {
  if (layers.empty()) throw InvalidArgument("NetworkSpec: no layers");
  return layers.back().weights.rows();
}

int NetworkSpec::hidden_unit_count() const {
  int units = 0;
  for (const auto& l : layers)
    if (l.act != Activation::identity) units += static_cast<int>(l.weights.rows());
  return units;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw InvalidArgument("NetworkSpec: no layers");
  Index prev = layers.front().weights.cols();
  for (const auto& l : layers) {
    if (l.weights.cols() != prev)
      throw DimensionMismatch("NetworkSpec: layer input width mismatch");
    if (l.bias.size() != l.weights.rows())
      throw DimensionMismatch("NetworkSpec: bias length mismatch");
    if (l.act == Activation::leaky_relu &&
        (!(l.slope > 0.0) || l.slope == 1.0))
      throw InvalidArgument("NetworkSpec: leaky slope must be positive and != 1");
    prev = l.weights.rows();
  }
  if (layers.back().act != Activation::identity)
    throw InvalidArgument("NetworkSpec: final layer activation must be identity");
}

Vec forward(const NetworkSpec& net, const Vec& z) {
  net.validate();
  if (z.size() != net.input_dim())
    throw DimensionMismatch("forward: input length mismatch");
  Vec v = z;
  for (const auto& l : net.layers) {
    v = l.weights * v + l.bias;
    switch (l.act) {
      case Activation::relu:
        v = v.cwiseMax(0.0);
        break;
      case Activation::leaky_relu:
        for (Index i = 0; i < v.size(); ++i)
          if (v(i) < 0.0) v(i) *= l.slope;
        break;
      case Activation::identity:
        break;
    }
  }
  return v;
}

namespace {

struct CompileState {
  const NetworkSpec* net;
  std::size_t region_cap;
  Index m;
  std::vector<AffinePiece> pieces;

  bool region_feasible(const Region& region) const {
    if (region.always_empty()) return false;
    if (region.halfspaces().empty()) return true;
    auto ball =
        lp::chebyshev_ball(region.constraint_matrix(), region.constraint_rhs());
    return ball.feasible && ball.radius > kFeasibilitySlack;
  }

  // Branches over sign patterns of the units of layer `li`, with the affine
  // map (mat, off) giving the pre-activation input as a function of z.
  void descend(size_t li, const Region& region, const Mat& mat, const Vec& off) {
    if (li == net->layers.size()) {
      AffinePiece p;
      p.region = region;
      p.matrix = mat;
      p.offset = off;
      pieces.push_back(std::move(p));
      if (pieces.size() > region_cap)
        throw RegionCapExceeded("compile_network: feasible pattern count above cap");
      return;
    }
    const Layer& layer = net->layers[li];
    Mat pre = layer.weights * mat;
    Vec q = layer.weights * off + layer.bias;
    if (layer.act == Activation::identity) {
      descend(li + 1, region, pre, q);
      return;
    }
    branch_unit(li, 0, region, pre, q);
  }

  void branch_unit(size_t li, Index unit, const Region& region, Mat pre, Vec q) {
    const Layer& layer = net->layers[li];
    const Index rows = pre.rows();
    if (unit == rows) {
      descend(li + 1, region, pre, q);
      return;
    }
    Vec a = pre.row(unit).transpose();
    double d = q(unit);
    double slope = layer.act == Activation::relu ? 0.0 : layer.slope;

    if (a.norm() < kConstantRowTol * std::max(1.0, std::abs(d))) {
      // Constant pre-activation: no geometric branching.
      Mat pre2 = pre;
      Vec q2 = q;
      if (d <= 0.0) {
        pre2.row(unit).setZero();
        q2(unit) = slope * d;
      }
      branch_unit(li, unit + 1, region, std::move(pre2), std::move(q2));
      return;
    }

    // Active branch: pre-activation >= 0, i.e. -a.z <= d.
    {
      Region r = region;
      r.add(-a, d);
      if (region_feasible(r)) branch_unit(li, unit + 1, r, pre, q);
    }
    // Inactive branch: pre-activation <= 0, i.e. a.z <= -d.
    {
      Region r = region;
      r.add(a, -d);
      if (region_feasible(r)) {
        Mat pre2 = pre;
        Vec q2 = q;
        pre2.row(unit) *= slope;
        q2(unit) *= slope;
        branch_unit(li, unit + 1, r, std::move(pre2), std::move(q2));
      }
    }
  }
};

}  // namespace

PiecewiseAffineFunction compile_network(const NetworkSpec& net,
                                        std::size_t region_cap) {
  net.validate();
  for (const auto& l : net.layers)
    if (l.act != Activation::relu && l.act != Activation::leaky_relu &&
        l.act != Activation::identity)
      throw UnsupportedActivation("compile_network: unsupported activation");
  if (net.hidden_unit_count() > kHiddenUnitCap)
    throw InvalidArgument("compile_network: more than 24 hidden units");

  CompileState state{&net, region_cap, net.input_dim(), {}};
  Region whole(net.input_dim());
  state.descend(0, whole, Mat::Identity(net.input_dim(), net.input_dim()),
                Vec::Zero(net.input_dim()));
  return PiecewiseAffineFunction(std::move(state.pieces), net.input_dim(),
                                 net.output_dim());
}

InjectivityVerdict architecture_check(const NetworkSpec& net) {
  net.validate();
  InjectivityVerdict v;
  v.method = "static";
  v.level = InjectivityLevel::unknown;

  bool widths_ok = true;
  Index prev = net.input_dim();
  for (const auto& l : net.layers) {
    if (l.weights.rows() < prev) widths_ok = false;
    prev = l.weights.rows();
  }
  bool ranks_ok = true;
  for (const auto& l : net.layers)
    if (numeric_rank(l.weights) < l.weights.cols()) ranks_ok = false;

  bool all_relu = true, all_leaky = true;
  for (size_t i = 0; i + 1 < net.layers.size(); ++i) {
    if (net.layers[i].act != Activation::relu) all_relu = false;
    if (net.layers[i].act != Activation::leaky_relu) all_leaky = false;
  }
  const bool single_affine = net.layers.size() == 1;

  if (!widths_ok) {
    v.certificate = "widths decrease along the network; static conditions do not apply";
    return v;
  }
  if (!ranks_ok) {
    v.certificate = "a weight matrix lacks full column rank";
    return v;
  }
  if (single_affine || all_leaky) {
    v.level = InjectivityLevel::injective;
    v.certificate = single_affine
                        ? "single affine layer with full column rank"
                        : "leaky-ReLU stack with non-decreasing widths and "
                          "full-column-rank weights";
    return v;
  }
  if (all_relu) {
    v.level = InjectivityLevel::observably_injective;
    v.certificate =
        "ReLU stack with non-decreasing widths and full-column-rank weights";
    return v;
  }
  v.certificate = "mixed hidden activations; static conditions do not apply";
  return v;
}

}  // namespace mixident
