#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "typlab/empirical.hpp"
#include "typlab/fixtures.hpp"
#include "typlab/measures.hpp"
#include "typlab/rng.hpp"
#include "typlab/sampling.hpp"

using namespace typlab;

TEST(SequenceTriple, RejectsUnequalOrEmpty) {
  EXPECT_THROW(SequenceTriple({0, 1}, {0}, {0, 1}), std::invalid_argument);
  EXPECT_THROW(SequenceTriple({}, {}, {}), std::invalid_argument);
}

TEST(CountOccurrences, Examples) {
  const Symbol a = 7, b = 9;
  const SequenceTriple s({a, a, b, a}, {1, 1, 1, 1}, {2, 2, 2, 2});
  EXPECT_EQ(count_occurrences(s, {a, 1, 2}), 3u);
  EXPECT_EQ(count_occurrences(s, {b, 1, 2}), 1u);
  EXPECT_EQ(count_occurrences(s, {a, 2, 2}), 0u);
  const auto t = empirical_type(s);
  std::uint64_t total = 0;
  for (const auto& [k, c] : t.counts()) total += count_occurrences(s, k);
  EXPECT_EQ(total, s.size());
}

TEST(EmpiricalType, Examples) {
  const auto one = empirical_type(SequenceTriple({3, 3, 3, 3}, {1, 1, 1, 1}, {0, 0, 0, 0}));
  ASSERT_EQ(one.q().size(), 1u);
  EXPECT_EQ(one.q().begin()->second, 1.0);

  const auto four = empirical_type(SequenceTriple({0, 1, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 0}));
  ASSERT_EQ(four.q().size(), 4u);
  for (const auto& [k, v] : four.q()) EXPECT_EQ(v, 0.25);
  const auto qx = four.q(0b001);
  EXPECT_EQ(lookup(qx, {0, 0, 0}), 0.5);
  EXPECT_EQ(lookup(qx, {1, 0, 0}), 0.5);
}

TEST(EmpiricalType, MarginalCountsAreExact) {
  std::mt19937_64 g(1);
  std::vector<Symbol> x(500), y(500), z(500);
  for (std::size_t i = 0; i < 500; ++i) {
    x[i] = g() % 5;
    y[i] = g() % 3;
    z[i] = g() % 4;
  }
  const auto t = empirical_type(SequenceTriple(x, y, z));
  for (Mask m = 1; m < 8; ++m) {
    Counts<3> expect;
    for (const auto& [k, c] : t.counts()) expect[project(k, m)] += c;
    EXPECT_EQ(t.marginal_counts(m), expect) << "mask " << m;
    std::uint64_t sum = 0;
    for (const auto& [k, c] : t.marginal_counts(m)) sum += c;
    EXPECT_EQ(sum, 500u);
  }
}

TEST(EmpiricalType, Exchangeable) {
  std::mt19937_64 g(2);
  std::vector<Symbol> x(300), y(300), z(300);
  for (std::size_t i = 0; i < 300; ++i) {
    x[i] = g() % 2;
    y[i] = g() % 2;
    z[i] = g() % 2;
  }
  const auto base = empirical_type(SequenceTriple(x, y, z));
  std::vector<std::size_t> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), g);
  std::vector<Symbol> px(300), py(300), pz(300);
  for (std::size_t i = 0; i < 300; ++i) {
    px[i] = x[perm[i]];
    py[i] = y[perm[i]];
    pz[i] = z[perm[i]];
  }
  const auto shuffled = empirical_type(SequenceTriple(px, py, pz));
  EXPECT_EQ(base.counts(), shuffled.counts());
  const auto model = fixtures::skewed_chain();
  EXPECT_EQ(loglik_gap(SequenceTriple(x, y, z), model).gap, loglik_gap(SequenceTriple(px, py, pz), model).gap);
}

TEST(LoglikGap, DeterministicKernelGivesZero) {
  const auto m = fixtures::deterministic_chain();
  const SequenceTriple s({0, 1, 1, 0}, {0, 1, 1, 0}, {1, 1, 0, 0});
  EXPECT_EQ(loglik_gap(s, m).gap, 0.0);
  EXPECT_EQ(loglik_gap_from_type(empirical_type(s), m).gap, 0.0);
}

TEST(LoglikGap, HandEvaluatedExample) {
  Table<2> side{{{0, 0}, 1.0}};
  Kernel k({{0, Pmf::bernoulli(0.25)}});
  const MarkovTriple m{JointPmf2(side), k};
  const SequenceTriple s({0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0});
  const double expect = -binary_entropy(0.25) - std::log2(0.75);
  EXPECT_NEAR(loglik_gap(s, m).gap, expect, 1e-15);
  EXPECT_NEAR(loglik_gap(s, m).gap, -0.3963, 1e-4);
  EXPECT_NEAR(loglik_gap_from_type(empirical_type(s), m).gap, expect, 1e-15);
}

TEST(LoglikGap, ZeroProbabilityIsFlagged) {
  const auto m = fixtures::deterministic_chain();
  const SequenceTriple s({1}, {0}, {0});
  const auto g = loglik_gap(s, m);
  EXPECT_TRUE(g.zero_probability);
  EXPECT_EQ(g.gap, kInf);
  EXPECT_TRUE(loglik_gap_from_type(empirical_type(s), m).zero_probability);
}

TEST(LoglikGap, BothRoutesAgree) {
  for (const auto& model : {fixtures::bsc_chain(), fixtures::skewed_chain(), fixtures::geometric_chain()}) {
    for (std::uint64_t t = 0; t < 50; ++t) {
      RngStream rng(99, t);
      const auto yz = sample_iid_pair(model.side(), 1 + t * 37, rng);
      const auto x = sample_conditional(model.kernel(), yz.first, rng);
      const SequenceTriple s(x, yz.first, yz.second);
      EXPECT_NEAR(loglik_gap(s, model).gap, loglik_gap_from_type(empirical_type(s), model).gap, 1e-9);
    }
  }
}
