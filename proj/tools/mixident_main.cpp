#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "mixident/align.hpp"
#include "mixident/catalog.hpp"
#include "mixident/datasets.hpp"
#include "mixident/errors.hpp"
#include "mixident/io.hpp"
#include "mixident/network.hpp"
#include "mixident/suite.hpp"

namespace fs = std::filesystem;
using namespace mixident;

namespace {

void ensure_dir(const std::string& out) {
  if (!out.empty()) fs::create_directories(out);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct GenOptions {
  std::string kind = "pinwheel";
  int n = 5000;
  int clusters = 3;
  double noise = 0.05;
  int ambient_dim = 2;
  std::uint64_t seed = 0;
  double radial_std = 0.3;
  double tangential_std = 0.05;
  double warp_rate = 0.25;
  std::string out = ".";
};

int run_gen(const GenOptions& opt) {
  DatasetSpec spec;
  spec.kind = opt.kind == "pinwheel" ? DatasetSpec::Kind::pinwheel
                                     : DatasetSpec::Kind::parallelograms;
  spec.n_samples = opt.n;
  spec.n_clusters = opt.clusters;
  spec.noise = opt.noise;
  spec.ambient_dim = opt.ambient_dim;
  spec.seed = opt.seed;
  spec.radial_std = opt.radial_std;
  spec.tangential_std = opt.tangential_std;
  spec.warp_rate = opt.warp_rate;

  LabeledData data = spec.kind == DatasetSpec::Kind::pinwheel
                         ? gen_pinwheel(spec)
                         : gen_parallelograms(spec);
  ensure_dir(opt.out);
  std::vector<std::string> header;
  for (Index c = 0; c < data.points.cols(); ++c)
    header.push_back("z" + std::to_string(c + 1));
  io::write_text_file(join(opt.out, "data.csv"),
                      io::matrix_to_csv(header, data.points));
  std::ostringstream labels;
  labels << "label\n";
  for (int l : data.labels) labels << l << "\n";
  io::write_text_file(join(opt.out, "labels.csv"), labels.str());
  std::cout << "wrote " << join(opt.out, "data.csv") << " and labels.csv ("
            << opt.n << " rows)\n";
  return 0;
}

int run_align(const std::string& a_path, const std::string& b_path, int dim,
              const std::string& out) {
  auto a = ingest_latents(a_path);
  auto b = ingest_latents(b_path);
  int d = dim < 0 ? static_cast<int>(a.dim()) : dim;
  auto report = cca_align(a, b, d);
  auto j = io::alignment_to_json(report);
  j["pair"] = {a.run_id, b.run_id};
  std::string text = j.dump(2) + "\n";
  if (!out.empty()) io::write_text_file(out, text);
  std::cout << text;
  return 0;
}

int run_mcc(const std::string& a_path, const std::string& b_path,
            const std::string& mode, int cca_dim, const std::string& corr,
            const std::string& out) {
  auto a = ingest_latents(a_path);
  auto b = ingest_latents(b_path);
  MccMode m = mode == "weak" ? MccMode::weak : MccMode::strong;
  CorrelationKind ck = corr == "spearman" ? CorrelationKind::spearman
                                          : CorrelationKind::pearson;
  double value = mcc(a, b, m, cca_dim, ck);
  io::json j;
  j["pair"] = {a.run_id, b.run_id};
  j["mode"] = mode;
  j["correlation"] = corr;
  if (m == MccMode::weak) j["cca_dim"] = cca_dim < 0 ? a.dim() : cca_dim;
  j["mcc"] = value;
  std::string text = j.dump(2) + "\n";
  if (!out.empty()) io::write_text_file(out, text);
  std::cout << text;
  return 0;
}

int run_distaff(const std::string& p_path, const std::string& q_path,
                const std::string& out) {
  auto p = io::gmm_from_json(io::load_json_file(p_path));
  auto q = io::gmm_from_json(io::load_json_file(q_path));
  auto [value, report] = dist_aff_l2(p, q);
  io::json j;
  j["pair"] = {fs::path(p_path).stem().string(), fs::path(q_path).stem().string()};
  j["dist_aff_l2"] = value;
  j["report"] = io::alignment_to_json(report);
  std::string text = j.dump(2) + "\n";
  if (!out.empty()) io::write_text_file(out, text);
  std::cout << text;
  return 0;
}

int run_nll_scan(const std::string& config_path, const std::string& out,
                 int threads) {
  std::ifstream in(config_path);
  if (!in) throw ParseError("cannot open " + config_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto cfg = io::parse_scan_config(buffer.str());
  auto result = grid_search(cfg.ground_truth, cfg.grid, threads);
  ensure_dir(out);
  io::write_text_file(join(out, "landscape.csv"), io::landscape_to_csv(result));
  io::write_text_file(
      join(out, "minimizers.json"),
      io::minimizers_to_json(result, cfg.ground_truth).dump(2) + "\n");
  std::cout << "scanned " << result.cells() << " cells ("
            << (result.full_scan ? "full" : "slice") << "); "
            << result.minimizer_indices.size()
            << " minimizers; gibbs margin " << result.gibbs_margin << "\n";
  return 0;
}

int run_inj_check(const std::string& net_path, int budget, std::uint64_t seed,
                  const std::string& out, const std::string& emit_pwa) {
  auto net = io::network_from_json(io::load_json_file(net_path));
  io::json j;
  j["network"] = fs::path(net_path).stem().string();
  j["static"] = io::verdict_to_json(architecture_check(net));
  if (net.hidden_unit_count() <= 24) {
    auto compiled = compile_network(net);
    j["pieces"] = compiled.piece_count();
    j["dynamic"] = io::verdict_to_json(classify_injectivity(compiled, budget, seed));
    if (!emit_pwa.empty())
      io::write_text_file(emit_pwa, io::pwa_to_json(compiled).dump(2) + "\n");
  } else {
    j["dynamic"] = nullptr;
    j["note"] = "network above the 24-hidden-unit compilation cap";
  }
  std::string text = j.dump(2) + "\n";
  if (!out.empty()) io::write_text_file(out, text);
  std::cout << text;
  return 0;
}

io::json suite_case_report(const std::string& name) {
  io::json j;
  j["case"] = name;
  if (name == "remark37") {
    auto [pa, pb] = catalog::fold_equal_priors();
    GenerativeModel ma{pa, catalog::abs_value_map(), 0.0};
    GenerativeModel mb{pb, catalog::abs_value_map(), 0.0};
    auto ev = verify_pushforward_equality(ma, mb, 1e-10);
    auto witness = recover_affine_witness(pa, pb, 1e-6);
    j["pushforward"] = io::evidence_to_json(ev);
    j["witness_found"] = witness.has_value();
    j["pass"] = ev.equal && !witness.has_value();
    return j;
  }
  if (name == "exampleC2") {
    auto bumps = catalog::two_bump_prior();
    auto [f, g] = catalog::folded_decoder_pair();
    GenerativeModel mf{bumps, f, 0.0};
    GenerativeModel mg{bumps, g, 0.0};
    auto ev = verify_pushforward_equality(mf, mg, 1e-10);
    auto [eq, w] = affine_equivalent(mf, mg, 1e-6);
    j["pushforward"] = io::evidence_to_json(ev);
    j["affine_equivalent"] = eq;
    j["pass"] = ev.equal && !eq;
    return j;
  }
  if (name == "exampleG8") {
    auto net = catalog::half_abs_network();
    auto compiled = compile_network(net);
    double max_diff = 0.0;
    for (int i = 0; i < 100; ++i) {
      double x = -5.0 + 10.0 * i / 99.0;
      max_diff = std::max(max_diff,
                          std::abs(compiled.evaluate(x) - std::abs(x) / 2.0));
    }
    auto dynamic = classify_injectivity(compiled);
    auto statics = architecture_check(net);
    j["max_abs_diff_vs_half_abs"] = max_diff;
    j["dynamic"] = io::verdict_to_json(dynamic);
    j["static"] = io::verdict_to_json(statics);
    j["pass"] = max_diff < 1e-12 &&
                dynamic.level == InjectivityLevel::not_weakly_injective &&
                dynamic.witness.has_value() &&
                statics.level == InjectivityLevel::unknown;
    return j;
  }
  throw InvalidArgument("unknown suite case '" + name + "'");
}

int run_suite_sweep(int trials, std::uint64_t seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::ostringstream csv;
  csv << "trial,m,K,pushforward_equal,witness_found,witness_delta_l2,npmix_ok\n";
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    int m = t % 2 + 1;
    int k = t % 3 + 1;
    GaussianMixture prior = [&] {
      std::vector<GaussianComponent> comps;
      for (int c = 0; c < k; ++c) {
        GaussianComponent comp;
        comp.weight = 1.0 / k;
        comp.mean = Vec::NullaryExpr(m, [&](Index) { return 3.0 * gauss(rng); });
        Mat g = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
        comp.cov = g * g.transpose() + 0.3 * Mat::Identity(m, m);
        comps.push_back(std::move(comp));
      }
      return make_gmm(std::move(comps));
    }();
    NetworkSpec net;
    for (;;) {
      net.layers.clear();
      Layer l1;
      l1.weights = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
      l1.bias = Vec::NullaryExpr(m, [&](Index) { return gauss(rng); });
      l1.act = Activation::leaky_relu;
      l1.slope = 0.3;
      Layer l2;
      l2.weights = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
      l2.bias = Vec::NullaryExpr(m, [&](Index) { return gauss(rng); });
      l2.act = Activation::identity;
      net.layers = {l1, l2};
      if (architecture_check(net).level == InjectivityLevel::injective) break;
    }
    auto decoder = compile_network(net);
    AffineMap h = [&] {
      for (;;) {
        Mat a = Mat::NullaryExpr(m, m, [&](Index, Index) { return gauss(rng); });
        if (condition_number(a) < 50.0)
          return AffineMap(a, Vec::NullaryExpr(m, [&](Index) { return gauss(rng); }));
      }
    }();
    GenerativeModel m1{prior, decoder, 0.0};
    GenerativeModel m2{affine_pushforward(prior, h),
                       precompose(decoder, h.inverse()), 0.0};
    auto ev = verify_pushforward_equality(m1, m2, 1e-8);
    auto witness = recover_affine_witness(m1.prior, m2.prior, 1e-6);
    double delta = witness
                       ? delta_l2(affine_pushforward(m1.prior, *witness), m2.prior)
                       : -1.0;
    bool npmix = verify_npmix_theorem(m1, m2);
    if (!npmix) ++failures;
    csv << t << "," << m << "," << k << "," << (ev.equal ? 1 : 0) << ","
        << (witness ? 1 : 0) << "," << io::format_double(delta) << ","
        << (npmix ? 1 : 0) << "\n";
  }
  ensure_dir(out);
  io::write_text_file(join(out, "sweep.csv"), csv.str());
  std::cout << "sweep: " << trials << " trials, " << failures
            << " failures; wrote " << join(out, "sweep.csv") << "\n";
  return failures == 0 ? 0 : 1;
}

int run_report(const std::vector<std::string>& runs,
               const std::vector<std::string>& gmms, const std::string& label,
               int cca_dim, const std::string& out) {
  if (runs.size() < 2)
    throw InvalidArgument("report: need at least two latent runs");
  if (!gmms.empty() && gmms.size() != runs.size())
    throw InvalidArgument("report: one gmm json per run is required");

  std::vector<LatentSample> samples;
  for (const auto& r : runs) samples.push_back(ingest_latents(r));
  std::vector<GaussianMixture> mixtures;
  for (const auto& g : gmms)
    mixtures.push_back(io::gmm_from_json(io::load_json_file(g)));

  io::json pairs = io::json::array();
  std::vector<double> strongs, weaks, dists;
  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t j2 = i + 1; j2 < samples.size(); ++j2) {
      io::json row;
      row["pair"] = {samples[i].run_id, samples[j2].run_id};
      double s = mcc(samples[i], samples[j2], MccMode::strong);
      double w = mcc(samples[i], samples[j2], MccMode::weak, cca_dim);
      row["strong_mcc"] = s;
      row["weak_mcc"] = w;
      strongs.push_back(s);
      weaks.push_back(w);
      if (!mixtures.empty()) {
        auto [d, rep] = dist_aff_l2(mixtures[i], mixtures[j2]);
        row["dist_aff_l2"] = d;
        dists.push_back(d);
      }
      pairs.push_back(std::move(row));
    }
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var)};
  };
  auto fmt = [](std::pair<double, double> ms) {
    std::ostringstream s;
    s.precision(4);
    s << ms.first << " (" << ms.second << ")";
    return s.str();
  };

  std::ostringstream table;
  table << "dataset,dist_aff_l2,strong_mcc,weak_mcc\n";
  table << label << "," << (dists.empty() ? "n/a" : fmt(mean_std(dists))) << ","
        << fmt(mean_std(strongs)) << "," << fmt(mean_std(weaks)) << "\n";

  ensure_dir(out);
  io::write_text_file(join(out, "report.json"), pairs.dump(2) + "\n");
  io::write_text_file(join(out, "report.csv"), table.str());
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identifiability toolkit for Gaussian-mixture priors and "
               "piecewise-affine decoders"};
  app.require_subcommand(1);

  GenOptions gen_opt;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic clustered dataset");
  gen->add_option("--kind", gen_opt.kind)
      ->check(CLI::IsMember({"pinwheel", "parallelograms"}));
  gen->add_option("--n", gen_opt.n);
  gen->add_option("--clusters", gen_opt.clusters);
  gen->add_option("--noise", gen_opt.noise);
  gen->add_option("--ambient-dim", gen_opt.ambient_dim);
  gen->add_option("--seed", gen_opt.seed);
  gen->add_option("--radial-std", gen_opt.radial_std);
  gen->add_option("--tangential-std", gen_opt.tangential_std);
  gen->add_option("--warp-rate", gen_opt.warp_rate);
  gen->add_option("--out", gen_opt.out);

  std::string a_path, b_path, out, mode = "strong", corr = "pearson";
  int cca_dim = -1;
  auto* align = app.add_subcommand("align", "CCA-align two latent CSV files");
  align->add_option("--a", a_path)->required();
  align->add_option("--b", b_path)->required();
  align->add_option("--dim", cca_dim);
  align->add_option("--out", out);

  std::string mcc_a, mcc_b, mcc_out;
  int mcc_dim = -1;
  auto* mcc_cmd = app.add_subcommand("mcc", "Mean correlation coefficient");
  mcc_cmd->add_option("--a", mcc_a)->required();
  mcc_cmd->add_option("--b", mcc_b)->required();
  mcc_cmd->add_option("--mode", mode)->check(CLI::IsMember({"strong", "weak"}));
  mcc_cmd->add_option("--cca-dim", mcc_dim);
  mcc_cmd->add_option("--corr", corr)
      ->check(CLI::IsMember({"pearson", "spearman"}));
  mcc_cmd->add_option("--out", mcc_out);

  std::string p_path, q_path, distaff_out;
  auto* distaff = app.add_subcommand("distaff",
                                     "Affine-alignment L2 distance of two "
                                     "mixture JSON files");
  distaff->add_option("--p", p_path)->required();
  distaff->add_option("--q", q_path)->required();
  distaff->add_option("--out", distaff_out);

  std::string config_path, scan_out = ".";
  int threads = 0;
  auto* scan = app.add_subcommand("nll-scan",
                                  "Population NLL grid scan from a config file");
  scan->add_option("--config", config_path)->required();
  scan->add_option("--out", scan_out);
  scan->add_option("--threads", threads);

  std::string net_path, inj_out, emit_pwa;
  int budget = 2048;
  std::uint64_t inj_seed = 0;
  auto* inj = app.add_subcommand("inj-check", "Injectivity verdicts for a network");
  inj->add_option("--network", net_path)->required();
  inj->add_option("--budget", budget);
  inj->add_option("--seed", inj_seed);
  inj->add_option("--out", inj_out);
  inj->add_option("--emit-pwa", emit_pwa);

  auto* suite = app.add_subcommand("suite", "Theorem and counterexample catalog");
  suite->require_subcommand(1);
  std::string case_name, suite_out;
  auto* suite_run = suite->add_subcommand("run", "Run a named catalog case");
  suite_run->add_option("--case", case_name)
      ->required()
      ->check(CLI::IsMember({"remark37", "exampleC2", "exampleG8", "sweep"}));
  suite_run->add_option("--out", suite_out);
  int trials = 50;
  std::uint64_t sweep_seed = 0;
  std::string sweep_out = ".";
  auto* suite_sweep = suite->add_subcommand("sweep", "Constructed-pair sweep");
  suite_sweep->add_option("--trials", trials);
  suite_sweep->add_option("--seed", sweep_seed);
  suite_sweep->add_option("--out", sweep_out);

  std::vector<std::string> report_runs, report_gmms;
  std::string report_label = "runs", report_out = ".";
  int report_dim = -1;
  auto* report = app.add_subcommand("report", "Pairwise metric report for runs");
  report->add_option("--runs", report_runs)->expected(-2);
  report->add_option("--gmms", report_gmms);
  report->add_option("--label", report_label);
  report->add_option("--cca-dim", report_dim);
  report->add_option("--out", report_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_opt);
    if (align->parsed()) return run_align(a_path, b_path, cca_dim, out);
    if (mcc_cmd->parsed())
      return run_mcc(mcc_a, mcc_b, mode, mcc_dim, corr, mcc_out);
    if (distaff->parsed()) return run_distaff(p_path, q_path, distaff_out);
    if (scan->parsed()) return run_nll_scan(config_path, scan_out, threads);
    if (inj->parsed())
      return run_inj_check(net_path, budget, inj_seed, inj_out, emit_pwa);
    if (suite->parsed()) {
      if (suite_run->parsed()) {
        if (case_name == "sweep") return run_suite_sweep(trials, sweep_seed, ".");
        auto j = suite_case_report(case_name);
        std::string text = j.dump(2) + "\n";
        if (!suite_out.empty()) io::write_text_file(suite_out, text);
        std::cout << text;
        return j["pass"].get<bool>() ? 0 : 1;
      }
      if (suite_sweep->parsed())
        return run_suite_sweep(trials, sweep_seed, sweep_out);
    }
    if (report->parsed())
      return run_report(report_runs, report_gmms, report_label, report_dim,
                        report_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
