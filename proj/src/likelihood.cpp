#include "mixident/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

#include "mixident/errors.hpp"
#include "mixident/quadrature.hpp"
#include "mixident/suite.hpp"

namespace mixident {

namespace {

constexpr double kDensityFloor = 1e-300;

double scalar_normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) /
         std::sqrt(2.0 * M_PI * var);
}

// Phi((hi - mean)/sd) - Phi((lo - mean)/sd) with infinite bounds allowed.
double interval_normal_mass(double lo, double hi, double mean, double sd) {
  double upper = std::isfinite(hi) ? normal_cdf((hi - mean) / sd) : 1.0;
  double lower = std::isfinite(lo) ? normal_cdf((lo - mean) / sd) : 0.0;
  return std::max(0.0, upper - lower);
}

}  // namespace

void GenerativeModel::validate() const {
  if (prior.dim() != decoder.in_dim())
    throw DimensionMismatch("GenerativeModel: prior and decoder dimension differ");
  if (noise_sigma < 0.0)
    throw InvalidArgument("GenerativeModel: negative noise level");
  if (noise_sigma == 0.0 && decoder.in_dim() != decoder.out_dim())
    throw InvalidArgument(
        "GenerativeModel: noiseless density requires square decoders");
}

PiecewiseAffineFunction single_layer_decoder(const std::array<double, 2>& alpha,
                                             const std::array<double, 2>& beta,
                                             const std::array<double, 2>& pi) {
  // Breakpoints of the active units; constant units contribute a global
  // offset.
  std::vector<double> breaks;
  double const_offset = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (alpha[static_cast<size_t>(j)] == 0.0) continue;
    if (beta[static_cast<size_t>(j)] == 0.0) {
      const_offset += alpha[static_cast<size_t>(j)] *
                      std::max(0.0, pi[static_cast<size_t>(j)]);
      continue;
    }
    breaks.push_back(-pi[static_cast<size_t>(j)] / beta[static_cast<size_t>(j)]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               breaks.end());

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<AffinePiece> pieces;
  for (size_t seg = 0; seg <= breaks.size(); ++seg) {
    double lo = seg == 0 ? -inf : breaks[seg - 1];
    double hi = seg == breaks.size() ? inf : breaks[seg];
    double mid;
    if (std::isfinite(lo) && std::isfinite(hi))
      mid = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      mid = lo + 1.0;
    else if (std::isfinite(hi))
      mid = hi - 1.0;
    else
      mid = 0.0;
    double a = 0.0, b = const_offset;
    for (int j = 0; j < 2; ++j) {
      double al = alpha[static_cast<size_t>(j)];
      double be = beta[static_cast<size_t>(j)];
      double pj = pi[static_cast<size_t>(j)];
      if (al == 0.0 || be == 0.0) continue;
      if (be * mid + pj > 0.0) {
        a += al * be;
        b += al * pj;
      }
    }
    AffinePiece p;
    p.region = Region(1);
    if (std::isfinite(hi)) p.region.add(Vec::Constant(1, 1.0), hi);
    if (std::isfinite(lo)) p.region.add(Vec::Constant(1, -1.0), -lo);
    p.matrix = Mat::Constant(1, 1, a);
    p.offset = Vec::Constant(1, b);
    pieces.push_back(std::move(p));
  }
  return PiecewiseAffineFunction(std::move(pieces), 1, 1);
}

double pushforward_density(const GenerativeModel& model, const Vec& x) {
  model.validate();
  if (model.noise_sigma != 0.0)
    throw InvalidArgument("pushforward_density: requires noise_sigma = 0");
  if (x.size() != model.decoder.out_dim())
    throw DimensionMismatch("pushforward_density: point length mismatch");
  if (!model.decoder.is_generic(x))
    throw NotGenericPoint("pushforward_density: x is not generic");
  auto pre = model.decoder.preimage(x);
  double total = 0.0;
  for (size_t k = 0; k < pre.points.size(); ++k) {
    double det = model.decoder.piece(pre.piece_index[k]).matrix.determinant();
    total += model.prior.density(pre.points[k]) / std::abs(det);
  }
  return total;
}

double noisy_density(const GenerativeModel& model, double x) {
  if (!(model.noise_sigma > 0.0))
    throw InvalidArgument("noisy_density: requires noise_sigma > 0");
  if (model.decoder.in_dim() != 1 || model.decoder.out_dim() != 1)
    throw DimensionMismatch("noisy_density: scalar decoders only");
  const double sigma2 = model.noise_sigma * model.noise_sigma;
  double total = 0.0;
  for (const auto& piece : model.decoder.pieces()) {
    if (piece.region.always_empty()) continue;
    auto [lo, hi] = piece.region.interval();
    if (!(hi > lo)) continue;
    double a = piece.matrix(0, 0);
    double b = piece.offset(0);
    if (std::abs(a) < 1e-14) {
      // Constant piece: an atom at b smeared by the observation noise.
      double mass = 0.0;
      for (const auto& comp : model.prior.components())
        mass += comp.weight * interval_normal_mass(lo, hi, comp.mean(0),
                                                   std::sqrt(comp.cov(0, 0)));
      total += mass * scalar_normal_pdf(x, b, sigma2);
      continue;
    }
    for (const auto& comp : model.prior.components()) {
      double mu = comp.mean(0);
      double v = comp.cov(0, 0);
      double var_x = a * a * v + sigma2;
      double dens = scalar_normal_pdf(x, a * mu + b, var_x);
      double v_star = 1.0 / (1.0 / v + a * a / sigma2);
      double m_star = v_star * (mu / v + a * (x - b) / sigma2);
      double frac = interval_normal_mass(lo, hi, m_star, std::sqrt(v_star));
      total += comp.weight * dens * frac;
    }
  }
  return total;
}

NllContext make_nll_context(const GenerativeModel& gt, int nodes_per_panel,
                            int max_panels) {
  gt.validate();
  if (!(gt.noise_sigma > 0.0))
    throw InvalidArgument("make_nll_context: ground truth needs noise_sigma > 0");
  if (gt.prior.dim() != 1)
    throw DimensionMismatch("make_nll_context: scalar models only");

  auto [z_lo, z_hi] = gt.prior.envelope(8.0);
  auto [img_lo, img_hi] = image_bounds(gt.decoder, z_lo, z_hi);
  double x_lo = img_lo(0) - 8.0 * gt.noise_sigma;
  double x_hi = img_hi(0) + 8.0 * gt.noise_sigma;

  double char_scale = gt.noise_sigma;
  for (const auto& comp : gt.prior.components())
    char_scale = std::min(char_scale, std::sqrt(comp.cov(0, 0)));
  int panels =
      quadrature::panels_for(x_lo, x_hi, 2.0 * char_scale, 8, max_panels);

  const auto& [xs, ws] = quadrature::gauss_legendre(nodes_per_panel);
  const double h = (x_hi - x_lo) / panels;
  NllContext ctx;
  ctx.nodes = Vec(panels * nodes_per_panel);
  ctx.weighted = Vec(panels * nodes_per_panel);
  double self = 0.0;
  Index q = 0;
  for (int p = 0; p < panels; ++p) {
    double mid = x_lo + (p + 0.5) * h;
    for (int k = 0; k < nodes_per_panel; ++k, ++q) {
      double x = mid + 0.5 * h * xs(k);
      double g = noisy_density(gt, x);
      ctx.nodes(q) = x;
      ctx.weighted(q) = 0.5 * h * ws(k) * g;
      self -= ctx.weighted(q) * std::log(std::max(g, kDensityFloor));
    }
  }
  ctx.gt_nll = self;
  return ctx;
}

double population_nll(const NllContext& ctx, const GenerativeModel& candidate,
                      int* underflows) {
  double total = 0.0;
  for (Index i = 0; i < ctx.nodes.size(); ++i) {
    double dens = noisy_density(candidate, ctx.nodes(i));
    if (dens < kDensityFloor) {
      dens = kDensityFloor;
      if (underflows) ++*underflows;
    }
    total -= ctx.weighted(i) * std::log(dens);
  }
  return total;
}

double population_nll(const GenerativeModel& candidate,
                      const GenerativeModel& gt, int* underflows) {
  return population_nll(make_nll_context(gt), candidate, underflows);
}

GenerativeModel build_toy_model(const ToyParams& params) {
  if (params.lambda.size() != params.mu.size() || params.lambda.empty())
    throw DimensionMismatch("build_toy_model: lambda and mu sizes differ");
  std::vector<GaussianComponent> comps;
  for (size_t j = 0; j < params.lambda.size(); ++j) {
    if (params.lambda[j] <= 0.0) continue;  // dead components drop out
    comps.push_back({params.lambda[j], Vec::Constant(1, params.mu[j]),
                     Mat::Constant(1, 1, params.component_var)});
  }
  if (comps.empty())
    throw NonPositiveWeight("build_toy_model: all mixture weights vanish");
  GenerativeModel model{make_gmm(std::move(comps)),
                        single_layer_decoder(params.alpha, params.beta, params.pi),
                        params.noise_sigma};
  return model;
}

namespace {

// Lattice points of the weight simplex with resolution 1/steps.
std::vector<std::vector<double>> simplex_lattice(int j, int steps) {
  std::vector<std::vector<double>> out;
  std::vector<int> counts(static_cast<size_t>(j), 0);
  std::function<void(int, int)> rec = [&](int slot, int remaining) {
    if (slot == j - 1) {
      counts[static_cast<size_t>(slot)] = remaining;
      std::vector<double> w(static_cast<size_t>(j));
      for (int t = 0; t < j; ++t)
        w[static_cast<size_t>(t)] = static_cast<double>(counts[static_cast<size_t>(t)]) / steps;
      out.push_back(std::move(w));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<size_t>(slot)] = c;
      rec(slot + 1, remaining - c);
    }
  };
  rec(0, steps);
  return out;
}

}  // namespace

ToyParams GridSearchResult::params_at(std::size_t idx,
                                      const ToyParams& gt) const {
  ToyParams p = gt;
  const double* row = table.data() + idx * row_len;
  p.lambda.assign(row, row + J);
  p.mu.assign(row + J, row + 2 * J);
  for (int u = 0; u < 2; ++u) {
    p.alpha[static_cast<size_t>(u)] = row[2 * J + u];
    p.beta[static_cast<size_t>(u)] = row[2 * J + 2 + u];
    p.pi[static_cast<size_t>(u)] = row[2 * J + 4 + u];
  }
  return p;
}

double GridSearchResult::nll_at(std::size_t idx) const {
  return table[idx * row_len + row_len - 1];
}

GridSearchResult grid_search(const ToyParams& gt, const GridSpec& spec,
                             int threads) {
  const int j = static_cast<int>(gt.lambda.size());
  if (j < 2 || j > 3)
    throw InvalidArgument("grid_search: toy family supports J in {2, 3}");
  if (!spec.mu.empty() && static_cast<int>(spec.mu.size()) != j)
    throw DimensionMismatch("grid_search: mu axes must match component count");

  std::vector<std::vector<double>> lambda_values;
  if (spec.lambda_step > 0.0) {
    int steps = static_cast<int>(std::llround(1.0 / spec.lambda_step));
    if (steps < 1 || std::abs(steps * spec.lambda_step - 1.0) > 1e-9)
      throw InvalidArgument("grid_search: lambda_step must divide 1");
    lambda_values = simplex_lattice(j, steps);
  } else {
    lambda_values = {gt.lambda};
  }

  auto axis_values = [&](const ParamAxis& axis, double fixed) {
    return axis.scanned() ? axis.values : std::vector<double>{fixed};
  };
  std::vector<std::vector<double>> mu_values;
  for (int t = 0; t < j; ++t)
    mu_values.push_back(axis_values(
        spec.mu.empty() ? ParamAxis{} : spec.mu[static_cast<size_t>(t)],
        gt.mu[static_cast<size_t>(t)]));
  std::vector<std::vector<double>> unit_values;
  for (int u = 0; u < 2; ++u)
    unit_values.push_back(axis_values(spec.alpha[static_cast<size_t>(u)],
                                      gt.alpha[static_cast<size_t>(u)]));
  for (int u = 0; u < 2; ++u)
    unit_values.push_back(axis_values(spec.beta[static_cast<size_t>(u)],
                                      gt.beta[static_cast<size_t>(u)]));
  for (int u = 0; u < 2; ++u)
    unit_values.push_back(axis_values(spec.pi[static_cast<size_t>(u)],
                                      gt.pi[static_cast<size_t>(u)]));

  std::size_t cells = lambda_values.size();
  for (const auto& v : mu_values) cells *= v.size();
  for (const auto& v : unit_values) cells *= v.size();
  if (cells > spec.cell_cap)
    throw GridTooLarge("grid_search: " + std::to_string(cells) +
                       " cells exceed the cap");

  GridSearchResult result;
  result.J = j;
  result.row_len = static_cast<std::size_t>(2 * j + 6 + 1);
  result.table.assign(cells * result.row_len, 0.0);
  result.full_scan = spec.lambda_step > 0.0;
  for (const auto& v : mu_values) result.full_scan &= v.size() > 1;
  for (const auto& v : unit_values) result.full_scan &= v.size() > 1;

  NllContext ctx = make_nll_context(build_toy_model(gt));
  result.gt_nll = ctx.gt_nll;

  // Mixed-radix decode: lambda block, then mu slots, then decoder slots.
  std::vector<std::size_t> radix;
  radix.push_back(lambda_values.size());
  for (const auto& v : mu_values) radix.push_back(v.size());
  for (const auto& v : unit_values) radix.push_back(v.size());

  std::vector<int> underflow_counts;
  auto evaluate_range = [&](std::size_t begin, std::size_t end, int* uf) {
    ToyParams p = gt;
    for (std::size_t cell = begin; cell < end; ++cell) {
      std::size_t rem = cell;
      std::vector<std::size_t> digit(radix.size());
      for (size_t d = 0; d < radix.size(); ++d) {
        digit[d] = rem % radix[d];
        rem /= radix[d];
      }
      p.lambda = lambda_values[digit[0]];
      for (int t = 0; t < j; ++t)
        p.mu[static_cast<size_t>(t)] =
            mu_values[static_cast<size_t>(t)][digit[1 + static_cast<size_t>(t)]];
      for (int s = 0; s < 6; ++s) {
        double value =
            unit_values[static_cast<size_t>(s)]
                       [digit[1 + static_cast<size_t>(j) + static_cast<size_t>(s)]];
        if (s < 2)
          p.alpha[static_cast<size_t>(s)] = value;
        else if (s < 4)
          p.beta[static_cast<size_t>(s - 2)] = value;
        else
          p.pi[static_cast<size_t>(s - 4)] = value;
      }
      double* row = result.table.data() + cell * result.row_len;
      for (int t = 0; t < j; ++t) row[t] = p.lambda[static_cast<size_t>(t)];
      for (int t = 0; t < j; ++t) row[j + t] = p.mu[static_cast<size_t>(t)];
      for (int u = 0; u < 2; ++u) {
        row[2 * j + u] = p.alpha[static_cast<size_t>(u)];
        row[2 * j + 2 + u] = p.beta[static_cast<size_t>(u)];
        row[2 * j + 4 + u] = p.pi[static_cast<size_t>(u)];
      }
      row[result.row_len - 1] = population_nll(ctx, build_toy_model(p), uf);
    }
  };

  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::max(
                                    1u, std::thread::hardware_concurrency()));
  n_threads = std::min<int>(n_threads, 8);
  if (n_threads <= 1 || cells < 64) {
    underflow_counts.assign(1, 0);
    evaluate_range(0, cells, &underflow_counts[0]);
  } else {
    underflow_counts.assign(static_cast<size_t>(n_threads), 0);
    std::vector<std::thread> pool;
    std::size_t chunk = (cells + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(cells, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(evaluate_range, begin, end,
                        &underflow_counts[static_cast<size_t>(t)]);
    }
    for (auto& th : pool) th.join();
  }
  for (int c : underflow_counts) result.underflows += c;

  result.min_nll = std::numeric_limits<double>::infinity();
  double min_vs_gt = std::numeric_limits<double>::infinity();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double nll = result.nll_at(cell);
    result.min_nll = std::min(result.min_nll, nll);
    min_vs_gt = std::min(min_vs_gt, nll - result.gt_nll);
  }
  result.gibbs_margin = min_vs_gt;
  for (std::size_t cell = 0; cell < cells; ++cell)
    if (result.nll_at(cell) <= result.min_nll + 1e-9)
      result.minimizer_indices.push_back(cell);
  return result;
}

std::pair<bool, std::optional<AffineMap>> affine_equivalent(
    const GenerativeModel& model1, const GenerativeModel& model2, double tol) {
  if (model1.prior.dim() != model2.prior.dim()) return {false, std::nullopt};
  if (std::abs(model1.noise_sigma - model2.noise_sigma) > tol)
    return {false, std::nullopt};

  auto witnesses = all_affine_witnesses(model1.prior, model2.prior, tol);
  if (witnesses.empty()) return {false, std::nullopt};

  auto [z_lo, z_hi] = model2.prior.envelope(6.0);
  std::mt19937_64 rng(2024);
  const Index m = model2.prior.dim();
  for (const auto& h : witnesses) {
    AffineMap back = h.inverse();
    bool ok = true;
    std::mt19937_64 probe_rng = rng;
    for (int s = 0; s < 200 && ok; ++s) {
      Vec y(m);
      for (Index t = 0; t < m; ++t)
        y(t) = std::uniform_real_distribution<double>(z_lo(t), z_hi(t))(probe_rng);
      Vec lhs = model2.decoder.evaluate(y);
      Vec rhs = model1.decoder.evaluate(back(y));
      double scale = std::max(1.0, lhs.lpNorm<Eigen::Infinity>());
      if ((lhs - rhs).lpNorm<Eigen::Infinity>() > tol * scale) ok = false;
    }
    if (ok) return {true, h};
  }
  return {false, std::nullopt};
}

}  // namespace mixident
