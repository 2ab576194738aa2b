#include "mixident/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mixident/errors.hpp"

namespace mixident {
namespace io {

namespace {

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vec vec_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + ": expected numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Mat mat_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ParseError(std::string(what) + ": expected a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Vec first = vec_from_json(j[0], what);
  Mat m(rows, first.size());
  m.row(0) = first.transpose();
  for (Index r = 1; r < rows; ++r) {
    Vec row = vec_from_json(j[static_cast<size_t>(r)], what);
    if (row.size() != m.cols())
      throw ParseError(std::string(what) + ": ragged matrix rows");
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace

json gmm_to_json(const GaussianMixture& gmm) {
  json j;
  j["dim"] = gmm.dim();
  json comps = json::array();
  for (const auto& c : gmm.components()) {
    json jc;
    jc["weight"] = c.weight;
    jc["mean"] = vec_to_json(c.mean);
    jc["cov"] = mat_to_json(c.cov);
    comps.push_back(std::move(jc));
  }
  j["components"] = std::move(comps);
  return j;
}

GaussianMixture gmm_from_json(const json& j) {
  if (!j.contains("components"))
    throw ParseError("gmm: missing 'components'");
  std::vector<GaussianComponent> comps;
  for (const auto& jc : j.at("components")) {
    GaussianComponent c;
    c.weight = jc.at("weight").get<double>();
    c.mean = vec_from_json(jc.at("mean"), "gmm mean");
    c.cov = mat_from_json(jc.at("cov"), "gmm cov");
    comps.push_back(std::move(c));
  }
  auto gmm = make_gmm(std::move(comps));
  if (j.contains("dim") && j.at("dim").get<Index>() != gmm.dim())
    throw ParseError("gmm: 'dim' disagrees with component dimensions");
  return gmm;
}

json network_to_json(const NetworkSpec& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json jl;
    jl["W"] = mat_to_json(l.weights);
    jl["b"] = vec_to_json(l.bias);
    switch (l.act) {
      case Activation::relu:
        jl["act"] = "relu";
        break;
      case Activation::leaky_relu:
        jl["act"] = "leaky_relu";
        jl["slope"] = l.slope;
        break;
      case Activation::identity:
        jl["act"] = "id";
        break;
    }
    layers.push_back(std::move(jl));
  }
  return json{{"layers", std::move(layers)}};
}

NetworkSpec network_from_json(const json& j) {
  NetworkSpec net;
  if (!j.contains("layers")) throw ParseError("network: missing 'layers'");
  for (const auto& jl : j.at("layers")) {
    Layer l;
    l.weights = mat_from_json(jl.at("W"), "layer W");
    l.bias = vec_from_json(jl.at("b"), "layer b");
    std::string act = jl.at("act").get<std::string>();
    if (act == "relu") {
      l.act = Activation::relu;
    } else if (act == "leaky_relu") {
      l.act = Activation::leaky_relu;
      l.slope = jl.value("slope", 0.01);
    } else if (act == "id") {
      l.act = Activation::identity;
    } else {
      throw ParseError("network: unknown activation '" + act + "'");
    }
    net.layers.push_back(std::move(l));
  }
  net.validate();
  return net;
}

json pwa_to_json(const PiecewiseAffineFunction& f) {
  json pieces = json::array();
  for (const auto& p : f.pieces()) {
    json jp;
    json halves = json::array();
    for (const auto& h : p.region.halfspaces())
      halves.push_back(json{{"c", vec_to_json(h.normal)}, {"d", h.offset}});
    jp["halfspaces"] = std::move(halves);
    jp["A"] = mat_to_json(p.matrix);
    jp["b"] = vec_to_json(p.offset);
    pieces.push_back(std::move(jp));
  }
  return pieces;
}

PiecewiseAffineFunction pwa_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw ParseError("pwa: expected a non-empty array of pieces");
  std::vector<AffinePiece> pieces;
  Index in_dim = 0, out_dim = 0;
  for (const auto& jp : j) {
    AffinePiece p;
    p.matrix = mat_from_json(jp.at("A"), "piece A");
    p.offset = vec_from_json(jp.at("b"), "piece b");
    in_dim = p.matrix.cols();
    out_dim = p.matrix.rows();
    p.region = Region(in_dim);
    for (const auto& jh : jp.at("halfspaces"))
      p.region.add(vec_from_json(jh.at("c"), "halfspace c"),
                   jh.at("d").get<double>());
    pieces.push_back(std::move(p));
  }
  return PiecewiseAffineFunction(std::move(pieces), in_dim, out_dim);
}

json structure_to_json(const LatentStructure& s) {
  json j;
  j["k"] = s.k;
  j["domain_sizes"] = s.domain_sizes;
  j["weights"] = s.joint_weights;
  j["neighborhoods"] = s.neighborhoods;
  if (!s.component_index.empty()) j["component_index"] = s.component_index;
  return j;
}

LatentStructure structure_from_json(const json& j) {
  LatentStructure s;
  s.k = j.at("k").get<int>();
  s.domain_sizes = j.at("domain_sizes").get<std::vector<int>>();
  s.joint_weights = j.at("weights").get<std::vector<double>>();
  s.neighborhoods = j.at("neighborhoods").get<std::vector<std::vector<int>>>();
  if (j.contains("component_index")) {
    s.component_index = j.at("component_index").get<std::vector<int>>();
  } else {
    s.component_index.resize(s.joint_weights.size());
    for (size_t i = 0; i < s.component_index.size(); ++i)
      s.component_index[i] = static_cast<int>(i);
  }
  s.validate();
  return s;
}

json unmixing_to_json(const UnmixingResult& r) {
  json j;
  j["unmixing"] = mat_to_json(r.unmixing);
  j["singular_values"] = vec_to_json(r.singular_values);
  j["pair"] = {r.pair_i1, r.pair_i2};
  if (r.permutation) j["permutation"] = mat_to_json(*r.permutation);
  if (r.scaling) j["scaling"] = vec_to_json(*r.scaling);
  if (r.residual) j["residual"] = *r.residual;
  return j;
}

json verdict_to_json(const InjectivityVerdict& v) {
  json j;
  j["level"] = to_string(v.level);
  j["method"] = v.method;
  j["certificate"] = v.certificate;
  if (v.witness) {
    j["witness"] = {{"z1", vec_to_json(v.witness->first)},
                    {"z2", vec_to_json(v.witness->second)}};
  }
  return j;
}

json alignment_to_json(const AlignmentReport& r) {
  json j;
  j["method"] = r.method;
  j["score"] = r.score;
  j["map"] = {{"matrix", mat_to_json(r.map.matrix)},
              {"offset", vec_to_json(r.map.offset)}};
  if (!r.permutation.empty()) j["permutation"] = r.permutation;
  j["rank_deficient"] = r.rank_deficient;
  if (r.canonical_correlations.size() > 0)
    j["canonical_correlations"] = vec_to_json(r.canonical_correlations);
  return j;
}

json evidence_to_json(const EqualityEvidence& e) {
  json j;
  j["verdict"] = e.equal ? "equal" : "distinct";
  j["max_abs_diff"] = e.max_abs_diff;
  j["max_rel_diff"] = e.max_rel_diff;
  j["tolerance"] = e.tolerance;
  j["points_used"] = e.points_used;
  j["points_skipped"] = e.points_skipped;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string matrix_to_csv(const std::vector<std::string>& header, const Mat& m) {
  std::ostringstream out;
  for (size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 == header.size() ? "\n" : ",");
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      out << format_double(m(r, c)) << (c + 1 == m.cols() ? "\n" : ",");
  return out.str();
}

namespace {

struct ConfigValues {
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, double> scalars;

  bool has(const std::string& key) const {
    return lists.count(key) || scalars.count(key);
  }
  double scalar(const std::string& key, double fallback) const {
    auto it = scalars.find(key);
    return it == scalars.end() ? fallback : it->second;
  }
};

double parse_number(const std::string& token, int line_no) {
  try {
    size_t used = 0;
    double v = std::stod(token, &used);
    while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used])))
      ++used;
    if (used != token.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config line " + std::to_string(line_no) +
                     ": cannot parse number '" + token + "'");
  }
}

std::map<std::string, ConfigValues> parse_sections(const std::string& text) {
  std::map<std::string, ConfigValues> sections;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) +
                         ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("config line " + std::to_string(line_no) +
                       ": empty key or value");
    auto& dest = sections[section];
    if (value.front() == '[') {
      if (value.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unterminated list");
      std::vector<double> items;
      std::string body = value.substr(1, value.size() - 2);
      std::stringstream ss(body);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        std::string t = trim(cell);
        if (!t.empty()) items.push_back(parse_number(t, line_no));
      }
      dest.lists[key] = std::move(items);
    } else {
      dest.scalars[key] = parse_number(value, line_no);
    }
  }
  return sections;
}

std::vector<double> expand_axis(const ConfigValues& grid,
                                const std::string& stem) {
  auto it = grid.lists.find(stem + "_values");
  if (it != grid.lists.end()) return it->second;
  auto range = grid.lists.find(stem + "_range");
  if (range != grid.lists.end()) {
    if (range->second.size() != 2)
      throw ParseError("config: " + stem + "_range needs [lo, hi]");
    double step = grid.scalar(stem + "_step", 0.0);
    if (!(step > 0.0))
      throw ParseError("config: " + stem + "_step must be positive");
    std::vector<double> values;
    for (double v = range->second[0]; v <= range->second[1] + 1e-12; v += step)
      values.push_back(v);
    return values;
  }
  return {};
}

}  // namespace

ScanConfig parse_scan_config(const std::string& text) {
  auto sections = parse_sections(text);
  if (!sections.count("ground_truth"))
    throw ParseError("config: missing [ground_truth] section");
  const auto& gt = sections.at("ground_truth");

  ScanConfig cfg;
  auto require_list = [&](const char* key) {
    auto it = gt.lists.find(key);
    if (it == gt.lists.end())
      throw ParseError(std::string("config: [ground_truth] needs ") + key);
    return it->second;
  };
  cfg.ground_truth.lambda = require_list("lambda");
  cfg.ground_truth.mu = require_list("mu");
  auto pair_list = [&](const char* key) {
    auto v = require_list(key);
    if (v.size() != 2)
      throw ParseError(std::string("config: ") + key + " needs two entries");
    return std::array<double, 2>{v[0], v[1]};
  };
  cfg.ground_truth.alpha = pair_list("alpha");
  cfg.ground_truth.beta = pair_list("beta");
  cfg.ground_truth.pi = pair_list("pi");
  cfg.ground_truth.component_var = gt.scalar("component_var", 1.0);
  cfg.ground_truth.noise_sigma = gt.scalar("noise_sigma", 0.5);
  if (cfg.ground_truth.lambda.size() != cfg.ground_truth.mu.size())
    throw ParseError("config: lambda and mu must have the same length");

  const int j = static_cast<int>(cfg.ground_truth.lambda.size());
  if (sections.count("grid")) {
    const auto& grid = sections.at("grid");
    cfg.grid.lambda_step = grid.scalar("lambda_step", 0.0);
    cfg.grid.cell_cap = static_cast<std::size_t>(
        grid.scalar("cell_cap", static_cast<double>(cfg.grid.cell_cap)));
    cfg.grid.mu.assign(static_cast<size_t>(j), ParamAxis{});
    for (int t = 0; t < j; ++t)
      cfg.grid.mu[static_cast<size_t>(t)].values =
          expand_axis(grid, "mu" + std::to_string(t + 1));
    for (int u = 0; u < 2; ++u) {
      cfg.grid.alpha[static_cast<size_t>(u)].values =
          expand_axis(grid, "alpha" + std::to_string(u + 1));
      cfg.grid.beta[static_cast<size_t>(u)].values =
          expand_axis(grid, "beta" + std::to_string(u + 1));
      cfg.grid.pi[static_cast<size_t>(u)].values =
          expand_axis(grid, "pi" + std::to_string(u + 1));
    }
  }
  return cfg;
}

std::string landscape_to_csv(const GridSearchResult& result) {
  std::ostringstream out;
  const int j = result.J;
  for (int t = 0; t < j; ++t) out << "lambda" << t + 1 << ",";
  for (int t = 0; t < j; ++t) out << "mu" << t + 1 << ",";
  out << "alpha1,alpha2,beta1,beta2,pi1,pi2,nll\n";
  for (std::size_t cell = 0; cell < result.cells(); ++cell) {
    const double* row = result.table.data() + cell * result.row_len;
    for (std::size_t c = 0; c < result.row_len; ++c)
      out << format_double(row[c]) << (c + 1 == result.row_len ? "\n" : ",");
  }
  return out.str();
}

json minimizers_to_json(const GridSearchResult& result, const ToyParams& gt) {
  json j;
  j["mode"] = result.full_scan ? "full" : "slice";
  j["cells"] = result.cells();
  j["min_nll"] = result.min_nll;
  j["gt_nll"] = result.gt_nll;
  j["gibbs_margin"] = result.gibbs_margin;
  j["underflows"] = result.underflows;
  json mins = json::array();
  for (auto idx : result.minimizer_indices) {
    ToyParams p = result.params_at(idx, gt);
    json jm;
    jm["lambda"] = p.lambda;
    jm["mu"] = p.mu;
    jm["alpha"] = {p.alpha[0], p.alpha[1]};
    jm["beta"] = {p.beta[0], p.beta[1]};
    jm["pi"] = {p.pi[0], p.pi[1]};
    jm["nll"] = result.nll_at(idx);
    mins.push_back(std::move(jm));
  }
  j["minimizers"] = std::move(mins);
  return j;
}

}  // namespace io
}  // namespace mixident
