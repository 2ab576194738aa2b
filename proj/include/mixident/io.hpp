#ifndef MIXIDENT_IO_HPP
#define MIXIDENT_IO_HPP

#include <string>
#include <vector>

#include "json.hpp"
#include "mixident/align.hpp"
#include "mixident/disentangle.hpp"
#include "mixident/gmm.hpp"
#include "mixident/injectivity.hpp"
#include "mixident/likelihood.hpp"
#include "mixident/network.hpp"
#include "mixident/suite.hpp"

namespace mixident {
namespace io {

using nlohmann::json;

// {"dim": m, "components": [{"weight": w, "mean": [...], "cov": [[...]]}]}
json gmm_to_json(const GaussianMixture& gmm);
GaussianMixture gmm_from_json(const json& j);

// {"layers": [{"W": [[...]], "b": [...], "act": "relu"|"leaky_relu"|"id",
//              "slope": a?}]}
json network_to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const json& j);

// Top-level array of {"halfspaces": [{"c": [...], "d": ...}], "A": [[...]],
// "b": [...]}.
json pwa_to_json(const PiecewiseAffineFunction& f);
PiecewiseAffineFunction pwa_from_json(const json& j);

// {"k": k, "domain_sizes": [...], "weights": [...], "neighborhoods": [[...]]}
json structure_to_json(const LatentStructure& s);
LatentStructure structure_from_json(const json& j);

json unmixing_to_json(const UnmixingResult& r);
json verdict_to_json(const InjectivityVerdict& v);
json alignment_to_json(const AlignmentReport& r);
json evidence_to_json(const EqualityEvidence& e);

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Fixed-format doubles (round-trip precision, C locale).
std::string format_double(double value);

// CSV with a mandatory header row, '.' decimal separator.
std::string matrix_to_csv(const std::vector<std::string>& header, const Mat& m);

// nll-scan configuration: TOML-like key = value lines under [ground_truth]
// and [grid] sections.
struct ScanConfig {
  ToyParams ground_truth;
  GridSpec grid;
};
ScanConfig parse_scan_config(const std::string& text);

std::string landscape_to_csv(const GridSearchResult& result);
json minimizers_to_json(const GridSearchResult& result, const ToyParams& gt);

}  // namespace io
}  // namespace mixident

#endif
