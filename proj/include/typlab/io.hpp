#pragma once

// File formats: JSON pmfs and Markov triples, JSON experiment configs,
// whitespace-separated sequence files, and JSON serialization of reports.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "typlab/empirical.hpp"
#include "typlab/experiments.hpp"
#include "typlab/model.hpp"
#include "typlab/typicality.hpp"

namespace typlab::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Malformed input; the message names the offending field or line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const json& require(const json& j, const std::string& field, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
  auto it = j.find(field);
  if (it == j.end()) throw FormatError(where + ": missing field '" + field + "'");
  return *it;
}

inline double number(const json& j, const std::string& field, const std::string& where) {
  const json& v = require(j, field, where);
  if (!v.is_number()) throw FormatError(where + ": field '" + field + "' must be a number");
  return v.get<double>();
}

inline std::uint64_t natural(const json& v, const std::string& field, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw FormatError(where + ": field '" + field + "' must be a nonnegative integer");
}

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace detail

inline Pmf pmf_from_json(const json& j, const std::string& where = "pmf") {
  const json& kind = detail::require(j, "kind", where);
  if (!kind.is_string()) throw FormatError(where + ": field 'kind' must be a string");
  const double tail_eps = j.contains("tail_eps") ? detail::number(j, "tail_eps", where) : kDefaultTailEps;
  const std::string k = kind.get<std::string>();
  try {
    if (k == "explicit") {
      const json& support = detail::require(j, "support", where);
      const json& probs = detail::require(j, "probs", where);
      if (!support.is_array()) throw FormatError(where + ": field 'support' must be an array");
      if (!probs.is_array()) throw FormatError(where + ": field 'probs' must be an array");
      std::vector<Symbol> s;
      std::vector<double> p;
      for (const auto& v : support) s.push_back(detail::natural(v, "support", where));
      for (const auto& v : probs) {
        if (!v.is_number()) throw FormatError(where + ": field 'probs' must hold numbers");
        p.push_back(v.get<double>());
      }
      return Pmf::from_atoms(std::move(s), std::move(p), tail_eps);
    }
    if (k == "geometric") return Pmf::geometric(detail::number(j, "p", where), tail_eps);
    if (k == "zipf") return Pmf::zipf(detail::number(j, "s", where), tail_eps);
  } catch (const ModelError& e) {
    throw FormatError(where + ": " + e.what());
  }
  throw FormatError(where + ": field 'kind' must be one of explicit, geometric, zipf");
}

inline json pmf_to_json(const Pmf& pmf) {
  json j;
  switch (pmf.kind()) {
    case PmfKind::kGeometric: j = {{"kind", "geometric"}, {"p", pmf.parameter()}}; break;
    case PmfKind::kZipf: j = {{"kind", "zipf"}, {"s", pmf.parameter()}}; break;
    case PmfKind::kExplicit: {
      json support = json::array(), probs = json::array();
      for (const auto& [x, p] : pmf.atoms()) {
        support.push_back(x);
        probs.push_back(p);
      }
      return {{"kind", "explicit"}, {"support", support}, {"probs", probs}};
    }
  }
  if (pmf.tail_eps() != kDefaultTailEps) j["tail_eps"] = pmf.tail_eps();
  return j;
}

inline bool is_triple_json(const json& j) { return j.is_object() && j.contains("side") && j.contains("kernel"); }

inline MarkovTriple triple_from_json(const json& j, const std::string& where = "model") {
  const json& side = detail::require(j, "side", where);
  if (!side.is_array()) throw FormatError(where + ": field 'side' must be an array of [y, z, prob]");
  Table<2> table;
  for (std::size_t i = 0; i < side.size(); ++i) {
    const json& e = side[i];
    const std::string at = where + ": side[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 3 || !e[2].is_number()) throw FormatError(at + " must be [y, z, prob]");
    const Key<2> key{detail::natural(e[0], "side", at), detail::natural(e[1], "side", at)};
    if (table.count(key)) throw FormatError(at + " repeats a (y, z) pair");
    table.emplace(key, e[2].get<double>());
  }
  const json& kernel_j = detail::require(j, "kernel", where);
  if (!kernel_j.is_object()) throw FormatError(where + ": field 'kernel' must be an object keyed by y");
  Kernel kernel;
  for (auto it = kernel_j.begin(); it != kernel_j.end(); ++it) {
    Symbol y = 0;
    try {
      std::size_t used = 0;
      y = std::stoull(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(where + ": kernel key '" + it.key() + "' is not a nonnegative integer");
    }
    kernel.set_row(y, pmf_from_json(it.value(), where + ": kernel[\"" + it.key() + "\"]"));
  }
  try {
    return MarkovTriple(JointPmf2(std::move(table), kDefaultTailEps), std::move(kernel));
  } catch (const ModelError& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const BoundViolation& e) {
    throw FormatError(where + ": kernel: " + e.what());
  }
}

inline json triple_to_json(const MarkovTriple& triple) {
  json side = json::array();
  for (const auto& [k, p] : triple.side().table()) side.push_back({k[0], k[1], p});
  json kernel = json::object();
  for (const auto& [y, row] : triple.kernel().rows()) kernel[std::to_string(y)] = pmf_to_json(row);
  return {{"side", side}, {"kernel", kernel}};
}

inline MarkovTriple load_triple(const std::filesystem::path& path) {
  return triple_from_json(detail::parse_file(path), path.string());
}

/// Either a single pmf or a Markov triple.
inline json load_json(const std::filesystem::path& path) { return detail::parse_file(path); }

/// One line per index: "x y z". Blank lines and lines starting with '#' are skipped.
inline SequenceTriple parse_sequences(std::istream& in, const std::string& where = "sequences") {
  std::vector<Symbol> x, y, z;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    if (fields.size() != 3) {
      throw FormatError(where + ": line " + std::to_string(line_no) + ": expected 3 integers, found " +
                        std::to_string(fields.size()));
    }
    Symbol v[3];
    for (int c = 0; c < 3; ++c) {
      try {
        std::size_t used = 0;
        if (fields[c].front() == '-') throw std::invalid_argument("negative");
        v[c] = std::stoull(fields[c], &used);
        if (used != fields[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError(where + ": line " + std::to_string(line_no) + ": '" + fields[c] +
                          "' is not a nonnegative integer");
      }
    }
    x.push_back(v[0]);
    y.push_back(v[1]);
    z.push_back(v[2]);
  }
  if (x.empty()) throw FormatError(where + ": no sequence entries");
  return SequenceTriple(std::move(x), std::move(y), std::move(z));
}

inline SequenceTriple load_sequences(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  return parse_sequences(f, path.string());
}

inline void write_sequences(std::ostream& out, const SequenceTriple& seqs) {
  for (std::size_t i = 0; i < seqs.size(); ++i) out << seqs.x()[i] << ' ' << seqs.y()[i] << ' ' << seqs.z()[i] << '\n';
}

/// +inf / NaN are not JSON numbers; they are written as strings.
inline ordered_json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline ordered_json report_to_json(const TypicalityReport& r) {
  ordered_json terms = ordered_json::object();
  if (r.combine == Combine::kSum) terms["D"] = number_json(r.divergence_term);
  for (const auto& [label, v] : r.entropy_terms) terms[label] = number_json(v);
  ordered_json j;
  j["variant"] = r.variant;
  j["combine"] = r.combine == Combine::kSum ? "sum" : "max";
  j["terms"] = terms;
  j["total"] = number_json(r.total);
  if (r.threshold) {
    j["threshold"] = *r.threshold;
    j["member"] = r.member;
  }
  return j;
}

inline ordered_json sweep_to_json(const SweepResult& result) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : result.rows) {
    ordered_json row;
    row["variant"] = r.variant;
    row["n"] = r.n;
    row["gamma"] = r.gamma;
    row["eta"] = r.eta;
    row["trials"] = r.trials;
    row["accepted"] = r.accepted;
    row["successes"] = r.successes;
    row["rate"] = number_json(r.rate);
    row["ci_low"] = r.ci.low;
    row["ci_high"] = r.ci.high;
    row["seed"] = r.seed;
    row["flagged"] = r.flagged();
    rows.push_back(row);
  }
  ordered_json j;
  j["rows"] = rows;
  return j;
}

/// Parsed experiment configuration plus the model it refers to.
struct LoadedConfig {
  ExperimentConfig config;
  std::optional<MarkovTriple> model;
};

/// Fields mirror ExperimentConfig: model (path relative to the config file,
/// or an inline triple), n_grid, gamma, eta (number) or eta_preset
/// ("half_gamma" | "variational" | "entropy_weighted"), trials, seed, variant,
/// literal_pair_draw.
inline LoadedConfig config_from_json(const json& j, const std::filesystem::path& base_dir,
                                     const std::string& where = "config") {
  LoadedConfig out;
  ExperimentConfig& c = out.config;
  const json& variant = detail::require(j, "variant", where);
  if (!variant.is_string() || !parse_experiment(variant.get<std::string>())) {
    throw FormatError(where + ": field 'variant' must be one of theorem1, corollary1, lemma2, lemma3, lemma5, "
                              "shortcut, semicontinuity");
  }
  c.variant = *parse_experiment(variant.get<std::string>());
  if (j.contains("model")) {
    const json& m = j.at("model");
    if (m.is_string()) {
      out.model = load_triple(base_dir / m.get<std::string>());
    } else {
      out.model = triple_from_json(m, where + ": model");
    }
  }
  if (j.contains("n_grid")) {
    const json& g = j.at("n_grid");
    if (!g.is_array() || g.empty()) throw FormatError(where + ": field 'n_grid' must be a nonempty array");
    for (const auto& v : g) c.n_grid.push_back(detail::natural(v, "n_grid", where));
  }
  if (j.contains("gamma")) c.gamma = detail::number(j, "gamma", where);
  if (j.contains("trials")) c.trials = detail::natural(j.at("trials"), "trials", where);
  if (j.contains("seed")) c.seed = detail::natural(j.at("seed"), "seed", where);
  if (j.contains("literal_pair_draw")) {
    if (!j.at("literal_pair_draw").is_boolean()) throw FormatError(where + ": field 'literal_pair_draw' must be boolean");
    c.literal_pair_draw = j.at("literal_pair_draw").get<bool>();
  }
  const bool lemma = c.variant == Experiment::kLemma2 || c.variant == Experiment::kLemma5;
  std::string preset = lemma ? "variational" : "half_gamma";
  if (j.contains("eta_preset")) {
    if (!j.at("eta_preset").is_string()) throw FormatError(where + ": field 'eta_preset' must be a string");
    preset = j.at("eta_preset").get<std::string>();
  }
  if (j.contains("eta")) {
    c.eta = detail::number(j, "eta", where);
  } else if (preset == "half_gamma") {
    c.eta = eta_half_gamma(c.gamma);
  } else if (preset == "variational") {
    c.eta = eta_variational(c.gamma);
  } else if (preset == "entropy_weighted") {
    if (!out.model) throw FormatError(where + ": eta_preset 'entropy_weighted' needs a model");
    c.eta = eta_entropy_weighted(c.gamma, out.model->moment_bound());
  } else {
    throw FormatError(where + ": field 'eta_preset' must be half_gamma, variational or entropy_weighted");
  }
  if (!(c.gamma > 0.0)) throw FormatError(where + ": field 'gamma' must be > 0");
  if (!(c.eta > 0.0)) throw FormatError(where + ": field 'eta' must be > 0");
  if (c.trials == 0) throw FormatError(where + ": field 'trials' must be >= 1");
  return out;
}

inline LoadedConfig load_config(const std::filesystem::path& path) {
  return config_from_json(detail::parse_file(path), path.parent_path(), path.string());
}

}  // namespace typlab::io
