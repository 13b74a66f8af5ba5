// Copyright 2026 The Geolex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "geolex/corpus.hpp"
#include "geolex/saliency.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace geolex;

TermCounts table(std::map<std::string, uint64_t> counts, uint64_t docs = 1) {
  TermCounts tc;
  for (const auto& [t, n] : counts) tc.counts[t] = n;
  for (const auto& [_, n] : counts) tc.total_tokens += n;
  tc.doc_count = docs;
  return tc;
}

// Worked example: y1=10 of n1=100 toxic tokens, y2=2 of n2=100 nontoxic,
// alpha_w=0.5, alpha0=1.
TEST(LogOdds, WorkedExample) {
  LogOddsResult r = log_odds_stats(10, 100, 2, 100, 0.5, 1.0);
  EXPECT_NEAR(r.delta, 1.5196, 1e-3);
  EXPECT_NEAR(r.variance, 0.49524, 1e-4);
  EXPECT_NEAR(r.z, 2.1594, 1e-3);
  // Frozen 30-digit references for the same inputs.
  EXPECT_NEAR(r.delta, 1.51979122276148538, 1e-12);
  EXPECT_NEAR(r.variance, 0.495238095238095238, 1e-14);
  EXPECT_NEAR(r.z, 2.15961785651909750, 1e-12);
}

TEST(LogOdds, WorkedExampleThroughTheFullTable) {
  // Background 5 of 10 tokens makes alpha_w = 1.0 * 5/10 = 0.5.
  TermCounts toxic = table({{"w", 10}, {"pad", 90}});
  TermCounts nontoxic = table({{"w", 2}, {"pad", 98}});
  TermCounts background = table({{"w", 5}, {"pad", 5}});
  SaliencyConfig cfg;
  cfg.prior_strength = 1.0;
  auto rows = dirichlet_log_odds(toxic, nontoxic, background, cfg);
  const LogOddsResult* w = nullptr;
  for (const auto& r : rows)
    if (r.term == "w") w = &r;
  ASSERT_NE(w, nullptr);
  EXPECT_NEAR(w->z, 2.15961785651909750, 1e-12);
}

TEST(LogOdds, IdenticalCorporaGiveZeroEverywhere) {
  TermCounts t = table({{"a", 5}, {"b", 7}});
  TermCounts bg = table({{"a", 10}, {"b", 14}});
  SaliencyConfig cfg;
  for (const auto& r : dirichlet_log_odds(t, t, bg, cfg)) {
    EXPECT_DOUBLE_EQ(r.delta, 0.0) << r.term;
    EXPECT_DOUBLE_EQ(r.z, 0.0) << r.term;
  }
}

TEST(LogOdds, ToxicOnlyTermScoresPositive) {
  TermCounts toxic = table({{"slur", 30}, {"pad", 70}});
  TermCounts nontoxic = table({{"pad", 100}});
  TermCounts bg = merge(toxic, nontoxic);
  SaliencyConfig cfg;
  for (const auto& r : dirichlet_log_odds(toxic, nontoxic, bg, cfg))
    if (r.term == "slur") {
      EXPECT_GT(r.z, 1.96);
      EXPECT_GT(r.delta, 0.0);
    }
}

TEST(LogOdds, AntisymmetricUnderGroupSwap) {
  TermCounts a = table({{"x", 9}, {"y", 21}});
  TermCounts b = table({{"x", 4}, {"y", 46}});
  TermCounts bg = merge(a, b);
  SaliencyConfig cfg;
  auto ab = dirichlet_log_odds(a, b, bg, cfg);
  auto ba = dirichlet_log_odds(b, a, bg, cfg);
  ASSERT_EQ(ab.size(), ba.size());
  for (size_t i = 0; i < ab.size(); ++i) {
    EXPECT_EQ(ab[i].term, ba[i].term);
    EXPECT_NEAR(ab[i].delta, -ba[i].delta, 1e-12);
    EXPECT_NEAR(ab[i].z, -ba[i].z, 1e-12);
  }
}

TEST(LogOdds, AgreesWithExtendedPrecisionReference) {
  DetEngine eng(2026);
  for (int trial = 0; trial < 500; ++trial) {
    const double n1 = 10 + static_cast<double>(uniform_below(eng, 999990));
    const double n2 = 10 + static_cast<double>(uniform_below(eng, 999990));
    const double y1 = static_cast<double>(uniform_below(eng, static_cast<uint64_t>(n1)));
    const double y2 = static_cast<double>(uniform_below(eng, static_cast<uint64_t>(n2)));
    const double a0 = 0.1 + 999.9 * unit_double(eng());
    const double aw = a0 * (0.001 + 0.998 * unit_double(eng()));
    LogOddsResult r = log_odds_stats(y1, n1, y2, n2, aw, a0);
    auto ref = testsupport::log_odds_reference(y1, n1, y2, n2, aw, a0);
    EXPECT_NEAR(r.z, static_cast<double>(ref.z), 1e-9)
        << "y1=" << y1 << " n1=" << n1 << " y2=" << y2 << " n2=" << n2;
  }
}

TEST(LogOdds, RejectsEmptyCorpora) {
  TermCounts empty;
  TermCounts some = table({{"a", 3}});
  SaliencyConfig cfg;
  EXPECT_THROW(dirichlet_log_odds(empty, some, some, cfg), InputError);
  EXPECT_THROW(dirichlet_log_odds(some, empty, some, cfg), InputError);
}

TEST(TermPrior, ScalesWithBackgroundFrequency) {
  TermCounts bg = table({{"common", 90}, {"rare", 10}});
  EXPECT_DOUBLE_EQ(term_prior(bg, "common", 100.0), 90.0);
  EXPECT_DOUBLE_EQ(term_prior(bg, "rare", 100.0), 10.0);
  // Unseen terms get the one-count floor.
  EXPECT_DOUBLE_EQ(term_prior(bg, "unseen", 100.0), 1.0);
}

TEST(Overrepresentation, WorkedExample) {
  // 10 global occurrences out of 1000; one country holds 5 of its 100 tokens.
  SaliencyConfig cfg;
  auto r = overrepresentation_test("t", "IN", 10, 1000, 5, 100, cfg);
  ASSERT_TRUE(r.has_value());
  const double expect_tail =
      1.0 - testsupport::beta_cdf_quadrature(10.0, 990.0, 0.05);
  EXPECT_NEAR(r->tail_prob, expect_tail, 1e-10);
  EXPECT_NEAR(r->tail_prob, 5.47003220251062724e-13, 1e-15);
  EXPECT_TRUE(r->significant(cfg));
}

TEST(Overrepresentation, AbsentLocallyIsNeverSignificant) {
  SaliencyConfig cfg;
  auto r = overrepresentation_test("t", "IN", 10, 1000, 0, 100, cfg);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->tail_prob, 1.0, 1e-12);
  EXPECT_FALSE(r->significant(cfg));
}

TEST(Overrepresentation, TailShrinksAsLocalCountGrows) {
  SaliencyConfig cfg;
  double prev = 1.1;
  for (uint64_t k = 0; k <= 4; ++k) {
    auto r = overrepresentation_test("t", "IN", 40, 4000, k, 200, cfg);
    ASSERT_TRUE(r.has_value());
    EXPECT_LT(r->tail_prob, prev) << k;
    prev = r->tail_prob;
  }
  // Far above the global rate the tail drowns below double precision.
  auto far = overrepresentation_test("t", "IN", 40, 4000, 20, 200, cfg);
  ASSERT_TRUE(far.has_value());
  EXPECT_LE(far->tail_prob, prev);
  EXPECT_LT(far->tail_prob, 1e-12);
}

TEST(Overrepresentation, MatchingFrequencySitsMidDistribution) {
  // Beta(2,2) at its median 0.5: tail exactly one half.
  SaliencyConfig cfg;
  auto r = overrepresentation_test("t", "IN", 2, 4, 1, 2, cfg);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->tail_prob, 0.5, 1e-12);
  EXPECT_FALSE(r->significant(cfg));
}

TEST(Overrepresentation, DegeneratePosteriorsYieldNullopt) {
  SaliencyConfig cfg;
  EXPECT_FALSE(overrepresentation_test("t", "IN", 0, 1000, 0, 100, cfg).has_value());
  EXPECT_FALSE(overrepresentation_test("t", "IN", 1000, 1000, 100, 100, cfg).has_value());
  EXPECT_THROW(overrepresentation_test("t", "IN", 10, 5, 1, 100, cfg), InputError);
  EXPECT_THROW(overrepresentation_test("t", "IN", 10, 1000, 1, 0, cfg), InputError);
}

TEST(Overrepresentation, LowerTailReadingFlipsTheGate) {
  SaliencyConfig cfg;
  cfg.lower_tail_reading = true;
  // Strong overrepresentation: upper tail ~0, so CDF ~1 and the literal
  // lower-tail reading does not fire.
  auto r = overrepresentation_test("t", "IN", 10, 1000, 5, 100, cfg);
  ASSERT_TRUE(r.has_value());
  EXPECT_FALSE(r->significant(cfg));
  // Strong underrepresentation fires instead.
  auto u = overrepresentation_test("t", "IN", 200, 1000, 0, 100, cfg);
  ASSERT_TRUE(u.has_value());
  EXPECT_TRUE(u->significant(cfg));
}

TEST(SaliencyConfig, ValidatesParameters) {
  SaliencyConfig cfg;
  cfg.prior_strength = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.p_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.p_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  EXPECT_NO_THROW(cfg.validate());
}

// End-to-end phase 1 on a miniature corpus: one term lives only in AA's
// toxic text, one profanity is common in toxic text of both countries.
TEST(Phase1, FindsLocalTermAndDropsGlobalProfanity) {
  std::vector<Document> docs;
  int no = 0;
  auto add = [&](const std::string& country, bool toxic, const std::string& extra) {
    std::string text = "alpha beta gamma delta";
    if (!extra.empty()) text += " " + extra;
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++), text, country,
                                         toxic ? 0.9 : 0.1));
  };
  for (int i = 0; i < 60; ++i) {
    const bool planted = i % 2 == 0;
    add("AA", true, planted ? "localterm badword" : "badword");
    add("AA", false, "alpha");
    add("BB", true, "badword");
    add("BB", false, "beta");
  }
  NormalizationConfig norm;
  CountryPartition part = build_partition(docs, norm);
  BalancedCorpus bal = build_balanced_toxic_corpus(part, 1);
  SaliencyConfig cfg;
  std::vector<std::string> diags;
  CandidateMap picked = phase1_select(part, bal, cfg, &diags);

  std::set<std::string> aa;
  for (const auto& c : picked.at("AA")) aa.insert(c.term);
  EXPECT_TRUE(aa.count("localterm"));
  for (const auto& [country, rows] : picked)
    for (const auto& c : rows) EXPECT_NE(c.term, "badword") << country;

  // Ranks are 1-based and ordered by z descending.
  const auto& rows = picked.at("AA");
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].rank, static_cast<int>(i) + 1);
    if (i) EXPECT_GE(rows[i - 1].z, rows[i].z);
  }
}

TEST(Phase1, MinCountGateSuppressesRareTerms) {
  std::vector<Document> docs;
  int no = 0;
  for (int i = 0; i < 40; ++i) {
    docs.push_back(testsupport::make_doc("a" + std::to_string(no++),
                                         i < 3 ? "filler rare" : "filler", "AA", 0.9));
    docs.push_back(testsupport::make_doc("b" + std::to_string(no++), "filler common",
                                         "AA", 0.1));
    docs.push_back(testsupport::make_doc("c" + std::to_string(no++), "filler", "BB", 0.9));
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++), "filler", "BB", 0.1));
  }
  NormalizationConfig norm;
  CountryPartition part = build_partition(docs, norm);
  BalancedCorpus bal = build_balanced_toxic_corpus(part, 1);
  SaliencyConfig cfg;  // min_count = 5 > 3 occurrences of "rare"
  CandidateMap picked = phase1_select(part, bal, cfg);
  for (const auto& c : picked.at("AA")) EXPECT_NE(c.term, "rare");
}

TEST(Phase1, OneVsRestVariantAlsoFindsTheLocalTerm) {
  std::vector<Document> docs;
  int no = 0;
  for (int i = 0; i < 60; ++i) {
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++),
                                         i % 2 ? "alpha beta localterm" : "alpha beta",
                                         "AA", i % 2 ? 0.9 : 0.1));
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++),
                                         i % 2 ? "alpha gamma" : "alpha beta", "BB",
                                         i % 2 ? 0.9 : 0.1));
  }
  NormalizationConfig norm;
  CountryPartition part = build_partition(docs, norm);
  BalancedCorpus bal = build_balanced_toxic_corpus(part, 1);
  SaliencyConfig cfg;
  cfg.geo_test = GeoTest::kOneVsRestLogOdds;
  CandidateMap picked = phase1_select(part, bal, cfg);
  std::set<std::string> aa;
  for (const auto& c : picked.at("AA")) aa.insert(c.term);
  EXPECT_TRUE(aa.count("localterm"));
}

TEST(Phase1, BetaPosteriorToxicityVariantRuns) {
  std::vector<Document> docs;
  int no = 0;
  for (int i = 0; i < 80; ++i) {
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++),
                                         i % 2 ? "alpha beta localterm" : "alpha beta",
                                         "AA", i % 2 ? 0.9 : 0.1));
    docs.push_back(testsupport::make_doc("d" + std::to_string(no++), "alpha beta", "BB",
                                         i % 2 ? 0.9 : 0.1));
  }
  NormalizationConfig norm;
  CountryPartition part = build_partition(docs, norm);
  BalancedCorpus bal = build_balanced_toxic_corpus(part, 1);
  SaliencyConfig cfg;
  cfg.toxicity_test = ToxicityTest::kBetaPosterior;
  CandidateMap picked = phase1_select(part, bal, cfg);
  std::set<std::string> aa;
  for (const auto& c : picked.at("AA")) aa.insert(c.term);
  EXPECT_TRUE(aa.count("localterm"));
}

TEST(Candidates, TsvRoundTrip) {
  std::vector<CandidateTerm> rows;
  CandidateTerm c;
  c.term = "localterm";
  c.country = "AA";
  c.z = 3.25;
  c.delta = 1.5;
  c.variance = 0.2129;
  c.tail_prob = 0.001;
  c.rank = 1;
  rows.push_back(c);
  std::ostringstream os;
  write_candidates(os, rows);
  std::istringstream is(os.str());
  auto back = read_candidates(is);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].term, "localterm");
  EXPECT_EQ(back[0].country, "AA");
  EXPECT_EQ(back[0].z, 3.25);
  EXPECT_EQ(back[0].tail_prob, 0.001);
  EXPECT_EQ(back[0].rank, 1);
}

}  // namespace
