// typlab: measures, typicality checks and Markov-lemma experiments.
//
// JSON goes to stdout, a human-readable table to stderr.
// Exit codes: 0 success, 1 error, 2 a sweep row accepted no trials.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "typlab/typlab.hpp"

namespace {

using typlab::io::ordered_json;
namespace fs = std::filesystem;

struct Options {
  std::string model;
  std::string config;
  std::string seq;
  std::vector<std::string> files;
  std::optional<double> gamma;
  std::optional<double> eta;
  std::vector<std::uint64_t> n;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
};

void print_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::string cell = r[i];
      cell.resize(width[i], ' ');
      line += (i ? "  " : "") + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    std::cerr << line << '\n';
  }
}

std::string fmt(double v) { return typlab::format_double(v); }

void print_sweep_table(const typlab::SweepResult& r) {
  std::vector<std::vector<std::string>> rows{{"variant", "n", "accepted", "successes", "rate", "ci_low", "ci_high"}};
  for (const auto& row : r.rows) {
    char rate[32], lo[32], hi[32];
    std::snprintf(rate, sizeof rate, "%.4f", row.rate);
    std::snprintf(lo, sizeof lo, "%.4f", row.ci.low);
    std::snprintf(hi, sizeof hi, "%.4f", row.ci.high);
    rows.push_back({row.variant, std::to_string(row.n), std::to_string(row.accepted), std::to_string(row.successes),
                    row.flagged() ? "flagged" : rate, lo, hi});
  }
  print_table(rows);
}

void print_report_table(const typlab::TypicalityReport& r) {
  std::vector<std::vector<std::string>> rows{{"term", "value"}};
  if (r.combine == typlab::Combine::kSum) rows.push_back({"D", fmt(r.divergence_term)});
  for (const auto& [label, v] : r.entropy_terms) rows.push_back({label, fmt(v)});
  rows.push_back({r.combine == typlab::Combine::kSum ? "total" : "max", fmt(r.total)});
  if (r.threshold) {
    rows.push_back({"threshold", fmt(*r.threshold)});
    rows.push_back({"member", r.member ? "true" : "false"});
  }
  print_table(rows);
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_measure(const Options& o) {
  std::vector<std::string> files = o.files;
  if (!o.model.empty()) files.insert(files.begin(), o.model);
  if (files.empty() || files.size() > 2) throw typlab::io::FormatError("measure: expects one or two pmf files");
  const auto first = typlab::io::load_json(files[0]);
  ordered_json out;
  if (typlab::io::is_triple_json(first)) {
    if (files.size() != 1) throw typlab::io::FormatError("measure: a Markov triple file must be given alone");
    const auto triple = typlab::io::triple_from_json(first, files[0]);
    const typlab::ModelReferences refs(triple);
    ordered_json h;
    for (typlab::Mask m : {0b111u, 0b011u, 0b110u, 0b101u, 0b001u, 0b010u, 0b100u}) {
      h[refs.xyz.label(m)] = refs.xyz.entropy_of(m);
    }
    const auto joint = typlab::induced_joint(triple);
    out["kind"] = "markov_triple";
    out["entropy"] = h;
    out["moment_bound"] = triple.moment_bound();
    out["conditional_entropy_X_given_YZ"] = refs.xyz.entropy_of(0b111) - refs.xyz.entropy_of(0b110);
    out["tabulated_atoms"] = joint.table.size();
    out["residual_mass"] = joint.residual;
    std::vector<std::vector<std::string>> rows{{"quantity", "bits"}};
    for (auto it = h.begin(); it != h.end(); ++it) rows.push_back({"H(" + it.key() + ")", fmt(it.value())});
    rows.push_back({"C", fmt(triple.moment_bound())});
    print_table(rows);
    emit(out);
    return 0;
  }
  std::vector<typlab::Pmf> pmfs;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto j = i == 0 ? first : typlab::io::load_json(files[i]);
    pmfs.push_back(typlab::io::pmf_from_json(j, files[i]));
  }
  std::vector<std::vector<std::string>> rows{{"quantity", "value"}};
  ordered_json pmf_out = ordered_json::array();
  for (std::size_t i = 0; i < pmfs.size(); ++i) {
    const auto h = typlab::entropy(pmfs[i]);
    ordered_json p;
    p["file"] = files[i];
    p["entropy"] = h.value;
    p["entropy_error"] = h.error;
    p["truncation_point"] = pmfs[i].truncation_point();
    p["residual_mass"] = pmfs[i].residual_mass();
    p["log_moment"] = typlab::log_moment(pmfs[i]).value;
    pmf_out.push_back(p);
    rows.push_back({"H(" + files[i] + ")", fmt(h.value)});
  }
  out["pmfs"] = pmf_out;
  if (pmfs.size() == 2) {
    const auto a = pmfs[0].table();
    const auto b = pmfs[1].table();
    out["kl_01"] = typlab::io::number_json(typlab::kl_divergence(a, b));
    out["kl_10"] = typlab::io::number_json(typlab::kl_divergence(b, a));
    out["variational"] = typlab::variational_distance(a, b);
    rows.push_back({"D(0||1)", fmt(typlab::kl_divergence(a, b))});
    rows.push_back({"D(1||0)", fmt(typlab::kl_divergence(b, a))});
    rows.push_back({"V", fmt(typlab::variational_distance(a, b))});
  }
  print_table(rows);
  emit(out);
  return 0;
}

int cmd_typical(const Options& o) {
  if (o.model.empty()) throw typlab::io::FormatError("typical: --model is required");
  if (o.seq.empty()) throw typlab::io::FormatError("typical: --seq is required");
  if (!o.gamma) throw typlab::io::FormatError("typical: --gamma is required");
  const auto variant = typlab::parse_variant(o.variant.empty() ? "unified3" : o.variant);
  if (!variant) throw typlab::io::FormatError("typical: --variant must be unified3, unified2, unified1, two_term or weak");
  const auto triple = typlab::io::load_triple(o.model);
  const auto seqs = typlab::io::load_sequences(o.seq);
  const auto report = typlab::is_typical(seqs, typlab::ModelReferences(triple), *o.gamma, *variant);
  print_report_table(report);
  emit(typlab::io::report_to_json(report));
  return 0;
}

typlab::io::LoadedConfig resolve_config(const Options& o, typlab::Experiment variant) {
  typlab::io::LoadedConfig lc;
  if (!o.config.empty()) lc = typlab::io::load_config(o.config);
  lc.config.variant = variant;
  if (!o.model.empty()) lc.model = typlab::io::load_triple(o.model);
  if (!o.n.empty()) lc.config.n_grid = o.n;
  if (o.gamma) lc.config.gamma = *o.gamma;
  if (o.trials) lc.config.trials = *o.trials;
  if (o.seed) lc.config.seed = *o.seed;
  if (o.eta) {
    lc.config.eta = *o.eta;
  } else if (o.config.empty()) {
    const bool lemma = variant == typlab::Experiment::kLemma2 || variant == typlab::Experiment::kLemma5;
    lc.config.eta = lemma ? typlab::eta_variational(lc.config.gamma) : typlab::eta_half_gamma(lc.config.gamma);
  }
  if (lc.config.n_grid.empty()) lc.config.n_grid = {100, 1000, 10000};
  lc.config.workers = typlab::workers_from_environment();
  if (!lc.model) throw typlab::io::FormatError("--model (or a config with a model) is required");
  return lc;
}

int finish_sweep(const typlab::SweepResult& r, const Options& o) {
  if (!o.out.empty()) typlab::write_sweep_csv(r, o.out);
  print_sweep_table(r);
  emit(typlab::io::sweep_to_json(r));
  return r.any_flagged() ? 2 : 0;
}

int cmd_sweep(const Options& o, std::optional<typlab::Experiment> fixed) {
  std::optional<typlab::Experiment> variant = fixed;
  if (!variant && !o.config.empty()) variant = typlab::io::load_config(o.config).config.variant;
  if (!variant) throw typlab::io::FormatError("sweep: --config is required");

  if (*variant == typlab::Experiment::kSemicontinuity) {
    std::vector<std::uint64_t> grid = o.n;
    if (grid.empty() && !o.config.empty()) grid = typlab::io::load_config(o.config).config.n_grid;
    if (grid.empty()) grid = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    const auto r = typlab::run_semicontinuity(grid);
    ordered_json spike = ordered_json::array(), mix = ordered_json::array();
    std::vector<std::vector<std::string>> rows{{"m", "V(P_m,d0)", "H(P_m)", "V(mix)", "|dH joint|", "|dH A|", "|dH B|"}};
    for (std::size_t i = 0; i < r.spike.size(); ++i) {
      const auto& s = r.spike[i];
      const auto& m = r.mixture[i];
      spike.push_back({{"m", s.m}, {"variational", s.variational}, {"entropy", s.entropy}});
      mix.push_back({{"m", m.m},
                     {"variational", m.variational},
                     {"joint_gap", m.joint_gap},
                     {"marginal_gap_a", m.marginal_gap_a},
                     {"marginal_gap_b", m.marginal_gap_b},
                     {"conditional_gap", m.conditional_gap}});
      rows.push_back({std::to_string(s.m), fmt(s.variational), fmt(s.entropy), fmt(m.variational), fmt(m.joint_gap),
                      fmt(m.marginal_gap_a), fmt(m.marginal_gap_b)});
    }
    print_table(rows);
    ordered_json j;
    j["spike"] = spike;
    j["mixture"] = mix;
    if (!o.out.empty()) {
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + o.out);
      f << j.dump(2) << '\n';
    }
    emit(j);
    return 0;
  }

  const auto lc = resolve_config(o, *variant);
  if (*variant == typlab::Experiment::kShortcut) {
    typlab::ShortcutConfig sc;
    sc.seed = lc.config.seed;
    sc.workers = lc.config.workers;
    if (!o.n.empty() || !o.config.empty()) sc.pool_sizes = lc.config.n_grid;
    if (o.trials || !o.config.empty()) sc.per_size = lc.config.trials;
    const auto rows = typlab::run_shortcut(sc, *lc.model);
    ordered_json arr = ordered_json::array();
    std::vector<std::vector<std::string>> table{{"t", "members", "max_two_term", "max_eight_term"}};
    for (const auto& r : rows) {
      arr.push_back({{"t", r.t}, {"members", r.members}, {"max_two_term", r.max_two_term},
                     {"max_eight_term", r.max_eight_term}});
      table.push_back({fmt(r.t), std::to_string(r.members), fmt(r.max_two_term), fmt(r.max_eight_term)});
    }
    print_table(table);
    ordered_json j;
    j["rows"] = arr;
    if (!o.out.empty()) {
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + o.out);
      f << j.dump(2) << '\n';
    }
    emit(j);
    return 0;
  }
  return finish_sweep(typlab::run_sweep(lc.config, *lc.model), o);
}

int cmd_lemmas(const Options& o) {
  std::vector<typlab::Experiment> which;
  if (o.variant.empty()) {
    which = {typlab::Experiment::kLemma2, typlab::Experiment::kLemma3, typlab::Experiment::kLemma5};
  } else {
    const auto v = typlab::parse_experiment(o.variant);
    if (!v || (*v != typlab::Experiment::kLemma2 && *v != typlab::Experiment::kLemma3 &&
               *v != typlab::Experiment::kLemma5)) {
      throw typlab::io::FormatError("lemmas: --variant must be lemma2, lemma3 or lemma5");
    }
    which = {*v};
  }
  typlab::SweepResult all;
  for (auto v : which) {
    const auto lc = resolve_config(o, v);
    auto r = typlab::run_sweep(lc.config, *lc.model);
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
  }
  return finish_sweep(all, o);
}

int cmd_markov(const Options& o, typlab::Experiment variant) {
  const auto lc = resolve_config(o, variant);
  const auto r = typlab::run_sweep(lc.config, *lc.model);
  if (variant == typlab::Experiment::kTheorem1) {
    std::cerr << "projection violations: " << r.projection_violations << ", entropy-weighted bound violations: "
              << r.lemma4_violations << " of " << r.lemma4_checked << '\n';
  } else {
    std::cerr << "XYZ members: " << r.triple_members << ", coupling violations: " << r.coupling_violations << '\n';
  }
  return finish_sweep(r, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typlab: unified typicality and Markov-lemma experiments over countable alphabets"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--model", o.model, "Markov triple (or pmf) JSON file");
    sub->add_option("--config", o.config, "Experiment config JSON file");
    sub->add_option("--gamma", o.gamma, "Typicality level gamma (epsilon for lemma harnesses)");
    sub->add_option("--eta", o.eta, "Conditioning level eta");
    sub->add_option("--n", o.n, "Comma-separated sequence lengths")->delimiter(',');
    sub->add_option("--trials", o.trials, "Trials per sequence length");
    sub->add_option("--seed", o.seed, "64-bit seed");
    sub->add_option("--out", o.out, "Output file (CSV for sweeps, JSON for studies)");
    sub->add_option("--variant", o.variant, "Variant name");
  };

  auto* measure = app.add_subcommand("measure", "Entropy, divergence and variational distance of pmf files");
  measure->add_option("--model", o.model, "Pmf or Markov triple JSON file");
  measure->add_option("files", o.files, "Pmf JSON files (one or two)");
  auto* typical = app.add_subcommand("typical", "Typicality report of a sequence file against a model");
  typical->add_option("--model", o.model, "Markov triple JSON file");
  typical->add_option("--seq", o.seq, "Sequence file, one 'x y z' line per index");
  typical->add_option("--gamma", o.gamma, "Threshold");
  typical->add_option("--variant", o.variant, "unified3 | unified2 | unified1 | two_term | weak");
  auto* markov = app.add_subcommand("markov-lemma", "Monte Carlo check of the Markov lemma");
  add_common(markov);
  auto* corollary = app.add_subcommand("corollary", "Monte Carlo check of the conditional Markov lemma");
  add_common(corollary);
  auto* lemmas = app.add_subcommand("lemmas", "Variational, log-likelihood and conditional-divergence harnesses");
  add_common(lemmas);
  auto* semi = app.add_subcommand("semicontinuity", "Entropy semicontinuity families (--n is the m grid)");
  add_common(semi);
  auto* sweep = app.add_subcommand("sweep", "Run the experiment described by --config");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (measure->parsed()) return cmd_measure(o);
    if (typical->parsed()) return cmd_typical(o);
    if (markov->parsed()) return cmd_markov(o, typlab::Experiment::kTheorem1);
    if (corollary->parsed()) return cmd_markov(o, typlab::Experiment::kCorollary1);
    if (lemmas->parsed()) return cmd_lemmas(o);
    if (semi->parsed()) return cmd_sweep(o, typlab::Experiment::kSemicontinuity);
    if (sweep->parsed()) return cmd_sweep(o, std::nullopt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
