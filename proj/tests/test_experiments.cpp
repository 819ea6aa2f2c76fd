#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "typlab/experiments.hpp"
#include "typlab/fixtures.hpp"

using namespace typlab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(Experiment v, std::vector<std::uint64_t> grid = {50, 200}) {
  ExperimentConfig c;
  c.variant = v;
  c.n_grid = std::move(grid);
  c.gamma = 0.25;
  c.eta = 0.05;
  c.trials = 60;
  c.seed = 7;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Wilson, KnownValues) {
  const auto w = wilson_interval(0, 0);
  EXPECT_EQ(w.low, 0.0);
  EXPECT_EQ(w.high, 1.0);
  const auto all = wilson_interval(100, 100);
  EXPECT_EQ(all.high, 1.0);
  EXPECT_NEAR(all.low, 100.0 / (100.0 + 1.959963984540054 * 1.959963984540054), 1e-12);
  EXPECT_EQ(wilson_interval(0, 10).low, 0.0);
  const auto half = wilson_interval(50, 100);
  EXPECT_NEAR(half.low + half.high, 1.0, 1e-12);
}

TEST(ExperimentConfig, Validation) {
  auto c = small_config(Experiment::kTheorem1);
  c.n_grid.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config(Experiment::kTheorem1);
  c.trials = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config(Experiment::kTheorem1);
  c.eta = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(MarkovHarness, DeterministicModelAlwaysSucceeds) {
  auto c = small_config(Experiment::kTheorem1, {10000});
  c.trials = 30;
  const auto r = run_theorem1(c, fixtures::deterministic_chain());
  const auto& row = r.row("theorem1", 10000);
  EXPECT_GT(row.accepted, 0u);
  EXPECT_EQ(row.successes, row.accepted);
  EXPECT_EQ(row.rate, 1.0);
}

TEST(MarkovHarness, CountsAreConsistent) {
  const auto r = run_theorem1(small_config(Experiment::kTheorem1), fixtures::bsc_chain());
  for (const auto& row : r.rows) {
    EXPECT_LE(row.successes, row.accepted);
    EXPECT_LE(row.accepted, row.trials);
  }
  for (const auto& rec : r.records) {
    if (!rec.conditioning_accepted) {
      EXPECT_FALSE(rec.success);
    }
  }
  EXPECT_EQ(r.projection_violations, 0u);
  EXPECT_EQ(r.lemma4_violations, 0u);
}

TEST(MarkovHarness, ZeroAcceptanceIsFlaggedNotFatal) {
  auto c = small_config(Experiment::kTheorem1, {5});
  c.eta = 1e-9;
  const auto r = run_theorem1(c, fixtures::skewed_chain());
  EXPECT_TRUE(r.any_flagged());
  EXPECT_TRUE(std::isnan(r.rows[0].rate));
  EXPECT_NE(sweep_csv(r).find(",nan,0,1,"), std::string::npos);
}

TEST(ConditionalHarness, DeterministicModelAlwaysSucceeds) {
  auto c = small_config(Experiment::kCorollary1, {2000});
  const auto r = run_corollary1(c, fixtures::deterministic_chain());
  EXPECT_GT(r.rows[0].accepted, 0u);
  EXPECT_EQ(r.rows[0].successes, r.rows[0].accepted);
}

TEST(ConditionalHarness, TripleMembershipImpliesSuccess) {
  const auto r = run_corollary1(small_config(Experiment::kCorollary1), fixtures::bsc_chain());
  EXPECT_EQ(r.coupling_violations, 0u);
  std::uint64_t successes = 0;
  for (const auto& row : r.rows) successes += row.successes;
  EXPECT_GE(successes, r.triple_members);
}

TEST(LoglikIdentityHarness, IdentityHoldsOnTypicalAndConstantPairs) {
  const auto r = run_lemma3(small_config(Experiment::kLemma3), fixtures::geometric_chain());
  for (const auto& row : r.rows) EXPECT_EQ(row.successes, row.trials);
}

TEST(RowDivergenceHarness, EmitsTwoRowsPerLength) {
  auto c = small_config(Experiment::kLemma5);
  c.eta = eta_variational(c.gamma);
  c.n_grid = {2000};
  c.trials = 40;
  const auto r = run_lemma5(c, fixtures::deterministic_chain());
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].variant, "lemma5_kl");
  EXPECT_EQ(r.rows[1].variant, "lemma5_entropy");
  // Rows of the deterministic kernel are point masses: both quantities vanish.
  for (const auto& row : r.rows) EXPECT_EQ(row.successes, row.accepted);
}

TEST(VariationalHarness, DeterministicModelDistanceIsSideFluctuation) {
  auto c = small_config(Experiment::kLemma2, {500});
  c.eta = 0.01;
  const auto m = fixtures::deterministic_chain();
  const auto r = run_lemma2(c, m);
  for (const auto& rec : r.records) {
    if (!rec.conditioning_accepted) continue;
    EXPECT_LE(rec.score_total, 2.0);
  }
}

TEST(EntropyWeightedBound, PreconditionAndExamples) {
  const auto m = fixtures::bsc_chain();
  // The exact n-type of the side table: lhs 0.
  std::vector<Symbol> y, z;
  for (int i = 0; i < 45; ++i) y.push_back(0), z.push_back(0);
  for (int i = 0; i < 5; ++i) y.push_back(0), z.push_back(1);
  for (int i = 0; i < 5; ++i) y.push_back(1), z.push_back(0);
  for (int i = 0; i < 45; ++i) y.push_back(1), z.push_back(1);
  const auto check = check_lemma4(y, z, m, 0.05);
  EXPECT_NEAR(check.lhs, 0.0, 1e-15);
  EXPECT_TRUE(check.holds());
  EXPECT_THROW(check_lemma4({0, 0, 0}, {1, 1, 1}, m, 0.05), std::invalid_argument);

  const auto det = fixtures::deterministic_chain();
  EXPECT_EQ(check_lemma4({0, 1, 1, 0, 1}, {0, 1, 1, 0, 1}, det, 1.0).lhs, 0.0);
}

TEST(Csv, HeaderOrderingAndEmptyResult) {
  SweepResult r;
  SweepRow b;
  b.variant = "theorem1";
  b.n = 1000;
  SweepRow a = b;
  a.n = 100;
  r.rows = {b, a};
  const std::string csv = sweep_csv(r);
  std::istringstream in(csv);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  EXPECT_EQ(l1, kSweepCsvHeader);
  EXPECT_EQ(l2.rfind("theorem1,100,", 0), 0u);
  EXPECT_EQ(l3.rfind("theorem1,1000,", 0), 0u);

  SweepResult one;
  one.rows = {a};
  const fs::path dir = fs::temp_directory_path() / "typlab_csv_test";
  fs::create_directories(dir);
  write_sweep_csv(one, dir / "one.csv");
  std::size_t lines = 0;
  for (char ch : read_file(dir / "one.csv")) lines += ch == '\n';
  EXPECT_EQ(lines, 2u);

  fs::remove(dir / "empty.csv");
  EXPECT_THROW(write_sweep_csv(SweepResult{}, dir / "empty.csv"), std::invalid_argument);
  EXPECT_FALSE(fs::exists(dir / "empty.csv"));
  EXPECT_THROW(write_sweep_csv(one, dir / "missing" / "x.csv"), std::runtime_error);
}

TEST(Determinism, WorkerCountDoesNotChangeOutput) {
  for (auto v : {Experiment::kTheorem1, Experiment::kCorollary1, Experiment::kLemma3}) {
    auto c = small_config(v);
    c.workers = 1;
    const std::string one = sweep_csv(run_sweep(c, fixtures::skewed_chain()));
    c.workers = 4;
    const std::string four = sweep_csv(run_sweep(c, fixtures::skewed_chain()));
    EXPECT_EQ(one, four) << to_string(v);
    c.workers = 3;
    EXPECT_EQ(one, sweep_csv(run_sweep(c, fixtures::skewed_chain())));
  }
}

TEST(StreamIds, DistinctAcrossGridAndTrials) {
  EXPECT_NE(stream_id_for(0, 1), stream_id_for(1, 0));
  EXPECT_EQ(stream_id_for(2, 5), (std::uint64_t{2} << 32) | 5);
}

TEST(Semicontinuity, SpikeFamilyClosedForm) {
  const auto r = run_semicontinuity({2, 1024});
  EXPECT_NEAR(r.spike[0].entropy, 2.0, 1e-12);
  EXPECT_NEAR(r.spike[1].variational, 2.0 / 1024.0, 1e-15);
  EXPECT_NEAR(r.spike[1].entropy, binary_entropy(1.0 / 1024.0) + 1.0, 1e-12);
  EXPECT_THROW(run_semicontinuity({4, 2}), std::invalid_argument);
  EXPECT_THROW(spike_family(kMaxSpikeExponent + 1), TruncationError);
}

TEST(Semicontinuity, BlockEntropyMatchesExplicitTable) {
  for (std::uint64_t m : {1, 2, 3, 5, 8, 12}) {
    Table<1> t;
    const double w = 1.0 / static_cast<double>(m);
    t[{0}] = 1.0 - w;
    const std::uint64_t count = std::uint64_t{1} << m;
    for (std::uint64_t i = 1; i <= count; ++i) t[{i}] += w / static_cast<double>(count);
    if (t[{0}] == 0.0) t.erase(Key<1>{0});
    EXPECT_NEAR(entropy(spike_family(m)), entropy(t), 1e-12) << m;
  }
}

TEST(Semicontinuity, MixtureGapsShrink) {
  const auto r = run_semicontinuity({2, 16, 128, 1024});
  for (std::size_t i = 1; i < r.mixture.size(); ++i) {
    EXPECT_LT(r.mixture[i].variational, r.mixture[i - 1].variational);
    EXPECT_LT(r.mixture[i].marginal_gap_a, r.mixture[i - 1].marginal_gap_a);
  }
  EXPECT_LT(r.mixture.back().marginal_gap_a, 0.01);
  EXPECT_LT(r.mixture.back().marginal_gap_b, 0.01);
}

TEST(Shortcut, MembersAreNested) {
  ShortcutConfig c;
  c.pool_sizes = {100, 1000, 10000};
  c.per_size = 16;
  c.seed = 3;
  const auto rows = run_shortcut(c, fixtures::bsc_chain());
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].members, rows[i - 1].members);
    EXPECT_LE(rows[i].max_eight_term, rows[i - 1].max_eight_term);
    EXPECT_LE(rows[i].max_two_term, rows[i].t);
  }
}

TEST(Workers, EnvironmentOverride) {
  ::setenv("TYPLAB_WORKERS", "3", 1);
  EXPECT_EQ(workers_from_environment(), 3u);
  ::setenv("TYPLAB_WORKERS", "zero", 1);
  EXPECT_THROW(workers_from_environment(), std::invalid_argument);
  ::setenv("TYPLAB_WORKERS", "0", 1);
  EXPECT_THROW(workers_from_environment(), std::invalid_argument);
  ::unsetenv("TYPLAB_WORKERS");
  EXPECT_GE(workers_from_environment(), 1u);
}
