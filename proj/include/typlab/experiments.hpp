#pragma once

// Monte Carlo harnesses for the Markov lemma and its supporting lemmas,
// plus the deterministic semicontinuity and two-term shortcut studies.
//
// Every trial is keyed by a stream id derived from (grid index, trial index),
// so a sweep is a pure function of (config, seed) for any worker count.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "typlab/empirical.hpp"
#include "typlab/measures.hpp"
#include "typlab/model.hpp"
#include "typlab/rng.hpp"
#include "typlab/sampling.hpp"
#include "typlab/typicality.hpp"

namespace typlab {

enum class Experiment { kTheorem1, kCorollary1, kLemma2, kLemma3, kLemma5, kShortcut, kSemicontinuity };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kTheorem1: return "theorem1";
    case Experiment::kCorollary1: return "corollary1";
    case Experiment::kLemma2: return "lemma2";
    case Experiment::kLemma3: return "lemma3";
    case Experiment::kLemma5: return "lemma5";
    case Experiment::kShortcut: return "shortcut";
    case Experiment::kSemicontinuity: return "semicontinuity";
  }
  return "?";
}

inline std::optional<Experiment> parse_experiment(const std::string& s) {
  for (auto e : {Experiment::kTheorem1, Experiment::kCorollary1, Experiment::kLemma2, Experiment::kLemma3,
                 Experiment::kLemma5, Experiment::kShortcut, Experiment::kSemicontinuity}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

/// eta = gamma / 2.
inline double eta_half_gamma(double gamma) { return gamma / 2.0; }
/// eta = eps^2 / 32, the variational-distance preset.
inline double eta_variational(double eps) { return eps * eps / 32.0; }
/// eta = eps^2 / ((0.5 + C)^2 2 ln 2), the entropy-weighted-difference preset.
inline double eta_entropy_weighted(double eps, double moment_bound) {
  const double a = 0.5 + moment_bound;
  return eps * eps / (a * a * 2.0 * kLn2);
}

struct ExperimentConfig {
  std::vector<std::uint64_t> n_grid;
  /// Membership level gamma; the lemma harnesses read it as epsilon.
  double gamma = 0.25;
  double eta = 0.125;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  Experiment variant = Experiment::kTheorem1;
  /// Worker threads; results do not depend on it.
  unsigned workers = 1;
  /// Corollary harness only: draw Y i.i.d. from P_Y (ignoring z) instead of
  /// from P_{Y|Z}(. | z_i) before conditioning on (Y, z) being typical.
  bool literal_pair_draw = false;

  void validate() const {
    if (n_grid.empty()) throw std::invalid_argument("config: n_grid is empty");
    for (auto n : n_grid) {
      if (n == 0) throw std::invalid_argument("config: n_grid entries must be >= 1");
    }
    if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be > 0");
    if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be > 0");
    if (trials == 0) throw std::invalid_argument("config: trials must be >= 1");
    if (workers == 0) throw std::invalid_argument("config: workers must be >= 1");
  }
};

struct TrialRecord {
  std::string variant;
  std::uint64_t n = 0;
  double gamma = 0.0;
  double eta = 0.0;
  std::uint64_t trial_id = 0;
  bool conditioning_accepted = false;
  /// Meaningful only when conditioning_accepted.
  bool success = false;
  double score_total = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // Harness-specific diagnostics.
  bool second_success = false;  // lemma5: entropy event
  bool triple_member = false;   // corollary1: (X, Y, z) in the XYZ set
  bool projection_ok = true;    // theorem1: marginal sets pass whenever XYZ passes
  double lemma4_lhs = 0.0;
  double lemma4_rhs = 0.0;
};

struct Wilson {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval at 95% (z = 1.959963984540054).
inline Wilson wilson_interval(std::uint64_t successes, std::uint64_t total) {
  if (total == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(total);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Pin the endpoints at 0 and 1 exactly when all trials agree.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == total ? 1.0 : std::min(1.0, centre + half)};
}

struct SweepRow {
  std::string variant;
  std::uint64_t n = 0;
  double gamma = 0.0;
  double eta = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  std::uint64_t successes = 0;
  double rate = 0.0;  // NaN when nothing was accepted
  Wilson ci;
  std::uint64_t seed = 0;

  /// No trial passed the conditioning filter (eta too small for this n).
  bool flagged() const { return accepted == 0; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TrialRecord> records;

  // theorem1: trials where the XYZ test passed but a marginal one failed.
  std::uint64_t projection_violations = 0;
  // theorem1: accepted trials with lemma4_lhs > lemma4_rhs.
  std::uint64_t lemma4_violations = 0;
  std::uint64_t lemma4_checked = 0;
  // corollary1: trials with (X, Y, z) in the XYZ set but (X, z) not in XZ.
  std::uint64_t coupling_violations = 0;
  std::uint64_t triple_members = 0;

  bool any_flagged() const {
    return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.flagged(); });
  }
  const SweepRow& row(const std::string& variant, std::uint64_t n) const {
    for (const auto& r : rows) {
      if (r.variant == variant && r.n == n) return r;
    }
    throw std::out_of_range("sweep result: no row " + variant + " n=" + std::to_string(n));
  }
};

/// Rates nondecreasing up to Wilson-interval overlap: each row's upper bound
/// reaches the previous row's lower bound. Rows with no acceptance are skipped.
inline bool nondecreasing_up_to_overlap(const std::vector<SweepRow>& rows) {
  const SweepRow* prev = nullptr;
  for (const auto& r : rows) {
    if (r.flagged()) continue;
    if (prev && r.ci.high < prev->ci.low) return false;
    prev = &r;
  }
  return true;
}

/// Worker count: hardware concurrency, or TYPLAB_WORKERS when set.
/// Throws std::invalid_argument when the variable is not a positive integer.
inline unsigned workers_from_environment() {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TYPLAB_WORKERS"); env != nullptr && *env != '\0') {
    unsigned long cap = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, cap);
    if (ec != std::errc() || ptr != end || cap == 0 || cap > 4096) {
      throw std::invalid_argument("TYPLAB_WORKERS must be a positive integer");
    }
    workers = static_cast<unsigned>(cap);
  }
  return workers;
}

inline std::uint64_t stream_id_for(std::size_t grid_index, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(grid_index) << 32) | (trial & 0xFFFFFFFFull);
}

namespace detail {

/// Run fn(trial) for trial in [0, count) on `workers` threads.
inline void parallel_for(std::uint64_t count, unsigned workers, const std::function<void(std::uint64_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::uint64_t>(count, 1024))));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::uint64_t i = next++; i < count && !failed; i = next++) fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline SweepRow aggregate(const std::string& variant, std::uint64_t n, const ExperimentConfig& cfg,
                          const std::vector<TrialRecord>& records, bool use_second = false) {
  SweepRow row{variant, n, cfg.gamma, cfg.eta, cfg.trials, 0, 0, 0.0, {}, cfg.seed};
  for (const auto& r : records) {
    if (!r.conditioning_accepted) continue;
    ++row.accepted;
    if (use_second ? r.second_success : r.success) ++row.successes;
  }
  row.rate = row.accepted == 0 ? std::nan("") : static_cast<double>(row.successes) / static_cast<double>(row.accepted);
  row.ci = wilson_interval(row.successes, row.accepted);
  return row;
}

/// Precomputed state shared (read-only) by all trials of one model.
struct Harness {
  explicit Harness(const MarkovTriple& model)
      : triple(model),
        refs(model),
        side_sampler(model.side()),
        kernel_sampler(model.kernel()),
        induced(induced_joint(model)) {
    for (const auto& [y, row] : model.kernel().rows()) row_entropy.emplace(y, entropy(row).value);
    CompensatedSum h;
    for (const auto& [yz, p] : model.side().table()) h += p * row_entropy.at(yz[0]);
    h_x_given_yz = h.value();
  }

  MarkovTriple triple;
  ModelReferences refs;
  JointSampler2 side_sampler;
  KernelSampler kernel_sampler;
  InducedJoint induced;
  std::map<Symbol, double> row_entropy;
  double h_x_given_yz = 0.0;
};

}  // namespace detail

/// |sum_{yz} (q(yz) - p(yz)) H(P_{X|Y=y})| and (0.5 + C) sqrt(2 eta ln 2).
struct Lemma4Check {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

namespace detail {

inline double lemma4_lhs(const EmpiricalType<2>& yz_type, const MarkovTriple& model,
                         const std::map<Symbol, double>& row_entropy) {
  const Table<2> q = yz_type.q();
  const Table<2>& p = model.side().table();
  CompensatedSum s;
  auto h_of = [&](Symbol y) {
    auto it = row_entropy.find(y);
    return it == row_entropy.end() ? entropy(model.kernel().row(y)).value : it->second;
  };
  for (const auto& [k, pv] : p) s += (lookup(q, k) - pv) * h_of(k[0]);
  for (const auto& [k, qv] : q) {
    if (p.count(k) == 0) s += qv * h_of(k[0]);
  }
  return std::fabs(s.value());
}

}  // namespace detail

/// Deterministic entropy-weighted bound for a conditioning pair that lies in
/// the YZ set at level eta. Throws std::invalid_argument otherwise.
inline Lemma4Check check_lemma4(const std::vector<Symbol>& y, const std::vector<Symbol>& z, const MarkovTriple& model,
                                double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("check_lemma4: eta must be > 0");
  const auto type = pair_type(y, z);
  const Reference<2> p_yz = Reference<2>::from_table(model.side().table(), {'Y', 'Z'});
  if (unified_score(type, p_yz).total > eta) {
    throw std::invalid_argument("check_lemma4: (y, z) is not in the YZ typical set at level eta");
  }
  std::map<Symbol, double> row_entropy;
  for (const auto& [yv, row] : model.kernel().rows()) row_entropy.emplace(yv, entropy(row).value);
  return {detail::lemma4_lhs(type, model, row_entropy),
          (0.5 + model.moment_bound()) * std::sqrt(2.0 * eta * kLn2)};
}

/// D(Q_{X|YZ} || P_{X|YZ} | Q_YZ) with the Markov conditional p(x|yz) = p(x|y).
inline double conditional_kl_markov(const JointType& type, const MarkovTriple& model) {
  const Counts<3>& yz = type.marginal_counts(kGivenYZ);
  CompensatedSum s;
  const auto n = static_cast<double>(type.n());
  for (const auto& [key, c] : type.counts()) {
    const double q = static_cast<double>(c) / n;
    const double q_cond = static_cast<double>(c) / static_cast<double>(yz.at(Key<3>{0, key[1], key[2]}));
    const double p_cond = model.kernel().mass(key[0], key[1]);
    if (!(p_cond > 0.0)) return kInf;
    s += q * std::log2(q_cond / p_cond);
  }
  return std::max(0.0, s.value());
}

/// Per (n, trial) body shared by the conditional-X harnesses: draw (y, z)
/// i.i.d., accept iff (y, z) is in the YZ set at eta, then draw X | y.
template <typename OnAccepted>
SweepResult run_conditional_sweep(const ExperimentConfig& cfg, const MarkovTriple& model,
                                  const std::vector<std::string>& variants, OnAccepted on_accepted) {
  cfg.validate();
  const detail::Harness h(model);
  SweepResult result;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const std::uint64_t n = cfg.n_grid[g];
    std::vector<TrialRecord> records(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.workers, [&](std::uint64_t t) {
      TrialRecord& rec = records[t];
      rec = TrialRecord{variants.front(), n, cfg.gamma, cfg.eta, t, false, false, 0.0, cfg.seed,
                        stream_id_for(g, t)};
      RngStream rng(cfg.seed, rec.stream_id);
      const SequencePair yz = sample_iid_pair(h.side_sampler, n, rng);
      const auto yz_type = pair_type(yz.first, yz.second);
      rec.conditioning_accepted = unified_score(yz_type, h.refs.yz).total <= cfg.eta;
      if (!rec.conditioning_accepted) return;
      const std::vector<Symbol> x = sample_conditional(h.kernel_sampler, yz.first, rng);
      const SequenceTriple seqs(x, yz.first, yz.second);
      on_accepted(h, seqs, yz_type, rec);
    });
    for (std::size_t v = 0; v < variants.size(); ++v) {
      result.rows.push_back(detail::aggregate(variants[v], n, cfg, records, v == 1));
    }
    result.records.insert(result.records.end(), records.begin(), records.end());
  }
  return result;
}

/// Markov lemma: success iff (X, y, z) is in the XYZ set at gamma. Also replays
/// the projection property and the entropy-weighted bound on every trial.
inline SweepResult run_theorem1(const ExperimentConfig& cfg, const MarkovTriple& model) {
  const double rhs = (0.5 + model.moment_bound()) * std::sqrt(2.0 * cfg.eta * kLn2);
  SweepResult r = run_conditional_sweep(
      cfg, model, {"theorem1"},
      [&](const detail::Harness& h, const SequenceTriple& seqs, const EmpiricalType<2>& yz_type, TrialRecord& rec) {
        const JointType type = empirical_type(seqs);
        const TypicalityReport report = unified_score(type, h.refs.xyz);
        rec.score_total = report.total;
        rec.success = report.total <= cfg.gamma;
        if (rec.success) rec.projection_ok = consistency_check(type, h.refs, cfg.gamma);
        rec.lemma4_lhs = detail::lemma4_lhs(yz_type, h.triple, h.row_entropy);
        rec.lemma4_rhs = rhs;
      });
  for (const auto& rec : r.records) {
    if (!rec.projection_ok) ++r.projection_violations;
    if (rec.conditioning_accepted) {
      ++r.lemma4_checked;
      if (rec.lemma4_lhs > rec.lemma4_rhs) ++r.lemma4_violations;
    }
  }
  return r;
}

/// Variational-distance concentration: success iff V(Q_XYZ, P_XYZ) <= eps
/// (eps = cfg.gamma).
inline SweepResult run_lemma2(const ExperimentConfig& cfg, const MarkovTriple& model) {
  return run_conditional_sweep(
      cfg, model, {"lemma2"},
      [&](const detail::Harness& h, const SequenceTriple& seqs, const EmpiricalType<2>&, TrialRecord& rec) {
        const double v = variational_distance(empirical_type(seqs).q(), h.induced.table) + h.induced.residual;
        rec.score_total = v;
        rec.success = v <= cfg.gamma;
      });
}

/// Conditional divergence and conditional entropy concentration. Emits two
/// rows per n: "lemma5_kl" and "lemma5_entropy".
inline SweepResult run_lemma5(const ExperimentConfig& cfg, const MarkovTriple& model) {
  return run_conditional_sweep(
      cfg, model, {"lemma5_kl", "lemma5_entropy"},
      [&](const detail::Harness& h, const SequenceTriple& seqs, const EmpiricalType<2>&, TrialRecord& rec) {
        const JointType type = empirical_type(seqs);
        const double dkl = conditional_kl_markov(type, h.triple);
        const double dh = std::fabs(conditional_entropy(type.q(), kGivenYZ) - h.h_x_given_yz);
        rec.score_total = dkl;
        rec.success = dkl <= cfg.gamma;
        rec.second_success = dh <= cfg.gamma;
      });
}

/// Log-likelihood decomposition identity: success iff the per-index and the
/// type-decomposed gaps agree within 1e-9. Odd trials use a constant
/// (adversarial, typically atypical) conditioning pair instead of an i.i.d. one.
inline SweepResult run_lemma3(const ExperimentConfig& cfg, const MarkovTriple& model) {
  cfg.validate();
  const detail::Harness h(model);
  const auto mode = std::max_element(model.side().table().begin(), model.side().table().end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; })
                        ->first;
  SweepResult result;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const std::uint64_t n = cfg.n_grid[g];
    std::vector<TrialRecord> records(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.workers, [&](std::uint64_t t) {
      TrialRecord& rec = records[t];
      rec = TrialRecord{"lemma3", n, cfg.gamma, cfg.eta, t, true, false, 0.0, cfg.seed, stream_id_for(g, t)};
      RngStream rng(cfg.seed, rec.stream_id);
      SequencePair yz;
      if (t % 2 == 0) {
        yz = sample_iid_pair(h.side_sampler, n, rng);
      } else {
        yz.first.assign(n, mode[0]);
        yz.second.assign(n, mode[1]);
      }
      const std::vector<Symbol> x = sample_conditional(h.kernel_sampler, yz.first, rng);
      const SequenceTriple seqs(x, yz.first, yz.second);
      const LoglikGap direct = loglik_gap(seqs, model);
      const LoglikGap decomposed = loglik_gap_from_type(empirical_type(seqs), model);
      rec.score_total = std::fabs(direct.gap - decomposed.gap);
      rec.success = !direct.zero_probability && rec.score_total <= 1e-9;
    });
    result.rows.push_back(detail::aggregate("lemma3", n, cfg, records));
    result.records.insert(result.records.end(), records.begin(), records.end());
  }
  return result;
}

/// Conditional Markov lemma: z ~ P_Z i.i.d., kept iff z is in the Z set at eta; Y drawn
/// given z and kept iff (Y, z) is in the YZ set at eta; X ~ p(x|Y). Success
/// iff (X, z) is in the XZ set at gamma. Also records whether (X, Y, z) is
/// in the XYZ set, which must imply success.
inline SweepResult run_corollary1(const ExperimentConfig& cfg, const MarkovTriple& model) {
  cfg.validate();
  const detail::Harness h(model);
  // P_Z and P_{Y|Z}.
  const Table<2> z_table = padded_marginal(model.side().table(), 0b10);
  std::vector<double> z_weights;
  std::vector<Symbol> z_symbols;
  for (const auto& [k, p] : z_table) {
    z_symbols.push_back(k[1]);
    z_weights.push_back(p);
  }
  const AliasTable z_sampler(z_weights);
  std::map<Symbol, std::pair<std::vector<Symbol>, AliasTable>> y_given_z;
  {
    std::map<Symbol, std::pair<std::vector<Symbol>, std::vector<double>>> rows;
    for (const auto& [k, p] : model.side().table()) {
      rows[k[1]].first.push_back(k[0]);
      rows[k[1]].second.push_back(p);
    }
    for (auto& [z, row] : rows) y_given_z.emplace(z, std::make_pair(row.first, AliasTable(row.second)));
  }
  const Table<2> y_table = padded_marginal(model.side().table(), 0b01);
  std::vector<Symbol> y_symbols;
  std::vector<double> y_weights;
  for (const auto& [k, p] : y_table) {
    y_symbols.push_back(k[0]);
    y_weights.push_back(p);
  }
  const AliasTable y_sampler(y_weights);

  SweepResult result;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const std::uint64_t n = cfg.n_grid[g];
    std::vector<TrialRecord> records(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.workers, [&](std::uint64_t t) {
      TrialRecord& rec = records[t];
      rec = TrialRecord{"corollary1", n, cfg.gamma, cfg.eta, t, false, false, 0.0, cfg.seed, stream_id_for(g, t)};
      RngStream rng(cfg.seed, rec.stream_id);
      std::vector<Symbol> z(n);
      for (auto& v : z) v = z_symbols[z_sampler.sample(rng)];
      if (unified_score(single_type(z), h.refs.z).total > cfg.eta) return;
      std::vector<Symbol> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (cfg.literal_pair_draw) {
          y[i] = y_symbols[y_sampler.sample(rng)];
        } else {
          const auto& [symbols, alias] = y_given_z.at(z[i]);
          y[i] = symbols[alias.sample(rng)];
        }
      }
      if (unified_score(pair_type(y, z), h.refs.yz).total > cfg.eta) return;
      rec.conditioning_accepted = true;
      const std::vector<Symbol> x = sample_conditional(h.kernel_sampler, y, rng);
      const TypicalityReport xz = unified_score(pair_type(x, z), h.refs.xz);
      rec.score_total = xz.total;
      rec.success = xz.total <= cfg.gamma;
      rec.triple_member = unified_score(empirical_type(SequenceTriple(x, y, z)), h.refs.xyz).total <= cfg.gamma;
    });
    result.rows.push_back(detail::aggregate("corollary1", n, cfg, records));
    for (const auto& rec : records) {
      if (rec.triple_member) {
        ++result.triple_members;
        if (!rec.success) ++result.coupling_violations;
      }
    }
    result.records.insert(result.records.end(), records.begin(), records.end());
  }
  return result;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, const MarkovTriple& model) {
  switch (cfg.variant) {
    case Experiment::kTheorem1: return run_theorem1(cfg, model);
    case Experiment::kCorollary1: return run_corollary1(cfg, model);
    case Experiment::kLemma2: return run_lemma2(cfg, model);
    case Experiment::kLemma3: return run_lemma3(cfg, model);
    case Experiment::kLemma5: return run_lemma5(cfg, model);
    default: throw std::invalid_argument("run_sweep: " + to_string(cfg.variant) + " is not a Monte Carlo sweep");
  }
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline constexpr const char* kSweepCsvHeader = "variant,n,gamma,eta,trials,accepted,successes,rate,ci_low,ci_high,seed";

inline std::string sweep_csv(const SweepResult& result) {
  std::vector<SweepRow> rows = result.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.variant != b.variant ? a.variant < b.variant : a.n < b.n;
  });
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.variant + "," + std::to_string(r.n) + "," + format_double(r.gamma) + "," + format_double(r.eta) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.accepted) + "," + std::to_string(r.successes) + "," +
           format_double(r.rate) + "," + format_double(r.ci.low) + "," + format_double(r.ci.high) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

/// Writes the sweep as CSV. Throws (creating no file) on empty results, and
/// std::runtime_error when the path cannot be written.
inline void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  if (result.rows.empty()) throw std::invalid_argument("write_sweep_csv: no rows");
  const std::string text = sweep_csv(result);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_sweep_csv: cannot open " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write_sweep_csv: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Semicontinuity

/// A block of equiprobable atoms; `log2_count` may describe more atoms than
/// fit in memory. Blocks with the same id denote the same atom set.
struct AtomBlock {
  std::uint64_t id = 0;
  double log2_count = 0.0;
  double mass = 0.0;
};

using BlockPmf = std::vector<AtomBlock>;

inline double entropy(const BlockPmf& blocks) {
  CompensatedSum s;
  for (const auto& b : blocks) {
    if (b.mass > 0.0) s += b.mass * (b.log2_count - std::log2(b.mass));
  }
  return s.value();
}

/// V between two block pmfs whose blocks either coincide (same id, same
/// count) or are disjoint.
inline double variational_distance(const BlockPmf& q, const BlockPmf& p) {
  std::map<std::uint64_t, std::pair<double, double>> by_id;
  for (const auto& b : q) by_id[b.id].first += b.mass;
  for (const auto& b : p) by_id[b.id].second += b.mass;
  CompensatedSum s;
  for (const auto& [id, m] : by_id) s += std::fabs(m.first - m.second);
  return s.value();
}

inline constexpr std::uint64_t kMaxSpikeExponent = 1u << 20;

/// P_m = (1 - 1/m) delta_0 + (1/m) Unif{1, ..., 2^m}.
inline BlockPmf spike_family(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("spike family: m must be >= 1");
  if (m > kMaxSpikeExponent) throw TruncationError("spike family: m exceeds the supported range");
  const double w = 1.0 / static_cast<double>(m);
  return {{0, 0.0, 1.0 - w}, {1, static_cast<double>(m), w}};
}

struct SpikeRow {
  std::uint64_t m = 0;
  double variational = 0.0;  // V(P_m, delta_0)
  double entropy = 0.0;      // H(P_m)
};

/// Two-variable family P_m = (1 - 1/m) P_AB + (1/m) R_AB, both with
/// countably infinite A and the same channel B | A.
struct MixtureRow {
  std::uint64_t m = 0;
  double variational = 0.0;      // V(P_m, P)
  double joint_gap = 0.0;        // |H(P_m,AB) - H(P_AB)|
  double marginal_gap_a = 0.0;   // |H(P_m,A) - H(P_A)|
  double marginal_gap_b = 0.0;   // |H(P_m,B) - H(P_B)|
  double conditional_gap = 0.0;  // H(P_m,B|A) - H(P_B|A)
};

struct SemicontinuityResult {
  std::vector<SpikeRow> spike;
  std::vector<MixtureRow> mixture;
};

namespace detail {

inline Table<2> parity_channel_joint(const Pmf& a_law) {
  // B = (A mod 2) xor Bern(0.25).
  Table<2> t;
  for (const auto& [a, p] : a_law.atoms()) {
    const Symbol parity = a % 2;
    t[{a, parity}] += 0.75 * p;
    t[{a, 1 - parity}] += 0.25 * p;
  }
  return t;
}

}  // namespace detail

inline SemicontinuityResult run_semicontinuity(const std::vector<std::uint64_t>& m_grid) {
  if (m_grid.empty()) throw std::invalid_argument("semicontinuity: empty m grid");
  for (std::size_t i = 1; i < m_grid.size(); ++i) {
    if (m_grid[i] <= m_grid[i - 1]) throw std::invalid_argument("semicontinuity: m grid must increase");
  }
  SemicontinuityResult out;
  const BlockPmf point = {{0, 0.0, 1.0}};
  for (auto m : m_grid) {
    const BlockPmf pm = spike_family(m);
    out.spike.push_back({m, variational_distance(pm, point), entropy(pm)});
  }

  const Table<2> p = detail::parity_channel_joint(Pmf::geometric(0.5));
  const Table<2> r = detail::parity_channel_joint(Pmf::geometric(0.3));
  const double h_joint = entropy(p);
  const double h_a = entropy(padded_marginal(p, 0b01));
  const double h_b = entropy(padded_marginal(p, 0b10));
  const double h_b_given_a = conditional_entropy(p, 0b01);
  for (auto m : m_grid) {
    const double w = 1.0 / static_cast<double>(m);
    Table<2> pm;
    for (const auto& [k, v] : p) pm[k] += (1.0 - w) * v;
    for (const auto& [k, v] : r) pm[k] += w * v;
    out.mixture.push_back({m, variational_distance(pm, p), std::fabs(entropy(pm) - h_joint),
                           std::fabs(entropy(padded_marginal(pm, 0b01)) - h_a),
                           std::fabs(entropy(padded_marginal(pm, 0b10)) - h_b),
                           conditional_entropy(pm, 0b01) - h_b_given_a});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-term shortcut

struct ShortcutRow {
  double t = 0.0;
  std::uint64_t members = 0;        // pool types with two-term score <= t
  double max_eight_term = 0.0;      // max unified (eight-term) total among them
  double max_two_term = 0.0;
};

struct ShortcutConfig {
  std::vector<std::uint64_t> pool_sizes{30, 100, 300, 1000, 3000, 10000, 30000, 100000};
  std::uint64_t per_size = 64;
  std::vector<double> t_grid{0.1, 0.05, 0.01};
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Builds a seeded pool of empirical types of i.i.d. samples from the model
/// at several lengths, then for each t reports the largest eight-term score
/// among pool members whose two-term score is at most t.
inline std::vector<ShortcutRow> run_shortcut(const ShortcutConfig& cfg, const MarkovTriple& model) {
  if (cfg.pool_sizes.empty() || cfg.t_grid.empty() || cfg.per_size == 0) {
    throw std::invalid_argument("shortcut: empty pool or t grid");
  }
  const detail::Harness h(model);
  struct Scores {
    double two = 0.0, eight = 0.0;
  };
  std::vector<Scores> pool(cfg.pool_sizes.size() * cfg.per_size);
  detail::parallel_for(pool.size(), cfg.workers, [&](std::uint64_t i) {
    const std::size_t g = i / cfg.per_size;
    RngStream rng(cfg.seed, stream_id_for(g, i % cfg.per_size));
    const SequencePair yz = sample_iid_pair(h.side_sampler, cfg.pool_sizes[g], rng);
    const auto x = sample_conditional(h.kernel_sampler, yz.first, rng);
    const JointType type = empirical_type(SequenceTriple(x, yz.first, yz.second));
    pool[i] = {two_term_score(type, h.refs.xyz).total, unified_score(type, h.refs.xyz).total};
  });
  std::vector<ShortcutRow> rows;
  for (double t : cfg.t_grid) {
    ShortcutRow row{t, 0, 0.0, 0.0};
    for (const auto& s : pool) {
      if (s.two <= t) {
        ++row.members;
        row.max_eight_term = std::max(row.max_eight_term, s.eight);
        row.max_two_term = std::max(row.max_two_term, s.two);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace typlab
