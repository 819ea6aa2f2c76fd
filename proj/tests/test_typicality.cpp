#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "typlab/fixtures.hpp"
#include "typlab/typicality.hpp"

using namespace typlab;

namespace {

Reference<3> uniform_cube() {
  Table<3> u;
  for (Symbol x : {0, 1})
    for (Symbol y : {0, 1})
      for (Symbol z : {0, 1}) u[{x, y, z}] = 0.125;
  return Reference<3>::from_table(u, {'X', 'Y', 'Z'});
}

const SequenceTriple& four_distinct() {
  static const SequenceTriple s({0, 1, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 0});
  return s;
}

}  // namespace

TEST(UnifiedScore3, ExactTypeScoresZero) {
  const auto p = uniform_cube();
  // Every atom of the cube once: the type equals P.
  std::vector<Symbol> x, y, z;
  for (Symbol a : {0, 1})
    for (Symbol b : {0, 1})
      for (Symbol c : {0, 1}) {
        x.push_back(a);
        y.push_back(b);
        z.push_back(c);
      }
  EXPECT_EQ(unified_score3(empirical_type(SequenceTriple(x, y, z)), p).total, 0.0);
}

TEST(UnifiedScore3, FourDistinctTriplesAgainstUniformCube) {
  const auto r = unified_score3(empirical_type(four_distinct()), uniform_cube());
  EXPECT_NEAR(r.divergence_term, 1.0, 1e-15);
  EXPECT_NEAR(r.term("XYZ"), 1.0, 1e-15);
  for (const char* l : {"XY", "YZ", "XZ", "X", "Y", "Z"}) EXPECT_NEAR(r.term(l), 0.0, 1e-15) << l;
  EXPECT_NEAR(r.total, 2.0, 1e-15);
  ASSERT_EQ(r.entropy_terms.size(), 7u);
  const char* order[] = {"XYZ", "XY", "YZ", "XZ", "X", "Y", "Z"};
  for (int i = 0; i < 7; ++i) EXPECT_EQ(r.entropy_terms[i].first, order[i]);
}

TEST(UnifiedScore3, SupportMismatchIsInfinite) {
  const auto p = Reference<3>::from_table(Table<3>{{{0, 0, 0}, 0.5}, {{1, 1, 1}, 0.5}}, {'X', 'Y', 'Z'});
  const auto t = empirical_type(SequenceTriple({0, 1}, {0, 0}, {0, 1}));
  const auto r = unified_score3(t, p);
  EXPECT_EQ(r.total, kInf);
  EXPECT_FALSE(with_threshold(r, 1e300).member);
}

TEST(UnifiedScore2, Examples) {
  Table<2> u{{{0, 0}, 0.25}, {{0, 1}, 0.25}, {{1, 0}, 0.25}, {{1, 1}, 0.25}};
  const JointPmf2 p(u);
  const auto r = unified_score2(pair_type(std::vector<Symbol>{0, 0, 1, 1}, std::vector<Symbol>{0, 0, 1, 1}), p);
  ASSERT_EQ(r.entropy_terms.size(), 3u);
  EXPECT_EQ(r.entropy_terms[0].first, "YZ");
  EXPECT_EQ(r.entropy_terms[1].first, "Y");
  EXPECT_EQ(r.entropy_terms[2].first, "Z");
  EXPECT_NEAR(r.divergence_term, 1.0, 1e-15);
  EXPECT_NEAR(r.term("YZ"), 1.0, 1e-15);
  EXPECT_NEAR(r.term("Y"), 0.0, 1e-15);
  EXPECT_NEAR(r.term("Z"), 0.0, 1e-15);
  EXPECT_NEAR(r.total, 2.0, 1e-15);
  const auto exact = unified_score2(pair_type(std::vector<Symbol>{0, 0, 1, 1}, std::vector<Symbol>{0, 1, 0, 1}), p);
  EXPECT_EQ(exact.total, 0.0);
}

TEST(TwoTermScore, Examples) {
  const auto p = uniform_cube();
  const auto r = two_term_score(empirical_type(four_distinct()), p);
  EXPECT_NEAR(r.total, 2.0, 1e-15);
  ASSERT_EQ(r.entropy_terms.size(), 1u);
  EXPECT_EQ(r.entropy_terms[0].first, "XYZ");
}

TEST(Scores, MatchBruteForceAndAreOrdered) {
  std::mt19937_64 g(21);
  for (int i = 0; i < 400; ++i) {
    const std::size_t a = 2 + g() % 2, b = 2 + g() % 2, c = 2 + g() % 2;
    const auto p = oracle::random_joint(g, a, b, c, 0.1);
    const auto q = oracle::random_joint(g, a, b, c, 0.3);
    const auto ref = Reference<3>::from_table(p.table(), {'X', 'Y', 'Z'});
    const auto u = unified_score(q.table(), ref);
    const auto terms = oracle::unified_terms(q, p);
    if (std::isinf(terms[0])) {
      EXPECT_EQ(u.total, kInf);
      continue;
    }
    EXPECT_NEAR(u.divergence_term, terms[0], 1e-12);
    for (int k = 0; k < 7; ++k) EXPECT_NEAR(u.entropy_terms[k].second, terms[k + 1], 1e-12);
    double sum = 0.0;
    for (double t : terms) sum += t;
    EXPECT_NEAR(u.total, sum, 1e-12);

    const auto two = two_term_score(q.table(), ref);
    EXPECT_GE(u.total, two.total - 1e-15);
    EXPECT_GE(two.total, two.divergence_term - 1e-15);
    EXPECT_GE(two.divergence_term, 0.0);

    EXPECT_NEAR(weak_score(q.table(), ref).total, oracle::weak(q, p), 1e-12);
  }
}

TEST(WeakScore, MissesWhatUnifiedCatches) {
  // Bimodal Q on {000, 111} against the uniform cube: every subset's
  // log-likelihood matches, so the weak score is 0, while D and the joint
  // and pair entropy terms are not.
  const auto p = uniform_cube();
  const auto t = empirical_type(SequenceTriple({0, 1}, {0, 1}, {0, 1}));
  EXPECT_NEAR(weak_score(t, p).total, 0.0, 1e-15);
  const auto u = unified_score3(t, p);
  EXPECT_NEAR(u.divergence_term, 2.0, 1e-15);
  EXPECT_NEAR(u.total, 2.0 + 2.0 + 3.0 * 1.0, 1e-15);
}

TEST(IsTypical, BoundaryAndExamples) {
  const auto m = fixtures::bsc_chain();
  const ModelReferences refs(m);
  const auto t = empirical_type(SequenceTriple({0, 1, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 0}));
  const auto r = is_typical(t, refs, 1.0, Variant::kUnified3);
  EXPECT_EQ(with_threshold(r, r.total).member, true);
  EXPECT_EQ(with_threshold(r, std::nextafter(r.total, 0.0)).member, false);
  EXPECT_THROW(is_typical(t, refs, 0.0, Variant::kUnified3), std::invalid_argument);

  const auto two = unified_score3(empirical_type(four_distinct()), uniform_cube());
  EXPECT_FALSE(with_threshold(two, 1.0).member);
  TypicalityReport zero;
  EXPECT_TRUE(with_threshold(zero, 1e-9).member);
}

TEST(IsTypical, VariantsScoreTheRightMarginal) {
  const auto m = fixtures::skewed_chain();
  const ModelReferences refs(m);
  const auto t = empirical_type(SequenceTriple({0, 1, 1, 0, 1}, {0, 0, 1, 1, 1}, {1, 0, 1, 0, 0}));
  EXPECT_EQ(is_typical(t, refs, 1.0, Variant::kUnified2).entropy_terms.size(), 3u);
  EXPECT_EQ(is_typical(t, refs, 1.0, Variant::kUnified1).entropy_terms.size(), 1u);
  EXPECT_EQ(is_typical(t, refs, 1.0, Variant::kWeak).combine, Combine::kMax);
  EXPECT_NEAR(is_typical(t, refs, 1.0, Variant::kUnified2).total,
              unified_score(project_type<3, 2>(t, {1, 2}), Reference<2>::from_table(m.side().table(), {'Y', 'Z'})).total,
              1e-12);
}

TEST(Reference, MarkovReferenceMatchesTable) {
  for (const auto& m : {fixtures::bsc_chain(), fixtures::skewed_chain()}) {
    const auto exact = reference_from(m);
    const auto tab = Reference<3>::from_table(induced_joint(m).table, {'X', 'Y', 'Z'});
    for (Mask mask = 1; mask < 8; ++mask) EXPECT_NEAR(exact.entropy_of(mask), tab.entropy_of(mask), 1e-12);
    for (Symbol x : {0, 1})
      for (Symbol y : {0, 1})
        for (Symbol z : {0, 1})
          for (Mask mask = 1; mask < 8; ++mask)
            EXPECT_NEAR(exact.marginal_mass(mask, {x, y, z}), tab.marginal_mass(mask, {x, y, z}), 1e-15);
  }
}

TEST(Consistency, ExhaustiveSmallBinary) {
  for (const auto& m : {fixtures::bsc_chain(), fixtures::skewed_chain()}) {
    const ModelReferences refs(m);
    for (std::size_t n = 1; n <= 4; ++n) {
      const std::uint64_t total = std::uint64_t{1} << (3 * n);
      for (std::uint64_t code = 0; code < total; ++code) {
        std::vector<Symbol> x(n), y(n), z(n);
        for (std::size_t i = 0; i < n; ++i) {
          x[i] = (code >> (3 * i)) & 1;
          y[i] = (code >> (3 * i + 1)) & 1;
          z[i] = (code >> (3 * i + 2)) & 1;
        }
        const auto t = empirical_type(SequenceTriple(x, y, z));
        for (double gamma : {0.1, 0.5, 1.0}) ASSERT_TRUE(consistency_check(t, refs, gamma));
      }
    }
  }
}

TEST(Consistency, NonMemberIsVacuous) {
  const auto m = fixtures::deterministic_chain();
  EXPECT_TRUE(consistency_check(SequenceTriple({1}, {0}, {0}), m, 0.1));
  EXPECT_TRUE(consistency_check(SequenceTriple({0, 1}, {0, 1}, {0, 1}), m, 0.1));
}

TEST(Scores, InvariantUnderRelabeling) {
  std::mt19937_64 g(8);
  const auto p = oracle::random_joint(g, 3, 2, 3, 0.1);
  const auto q = oracle::random_joint(g, 3, 2, 3, 0.1);
  // Permute the X and Z alphabets consistently, and move Y far away.
  const Symbol px[3] = {2, 0, 1}, pz[3] = {1, 2, 0};
  auto relabel = [&](const Table<3>& t) {
    Table<3> out;
    for (const auto& [k, v] : t) out[{px[k[0]], k[1] + 1000000007ull, pz[k[2]]}] = v;
    return out;
  };
  const auto ref = Reference<3>::from_table(p.table(), {'X', 'Y', 'Z'});
  const auto ref2 = Reference<3>::from_table(relabel(p.table()), {'X', 'Y', 'Z'});
  const auto a = unified_score(q.table(), ref), b = unified_score(relabel(q.table()), ref2);
  if (std::isinf(a.total)) {
    EXPECT_EQ(b.total, kInf);
  } else {
    EXPECT_NEAR(a.total, b.total, 1e-12);
    EXPECT_NEAR(weak_score(q.table(), ref).total, weak_score(relabel(q.table()), ref2).total, 1e-12);
  }
}
