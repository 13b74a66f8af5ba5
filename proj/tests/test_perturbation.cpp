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

#include <algorithm>
#include <set>
#include <sstream>

#include "geolex/perturbation.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace geolex;

PerturbationVector vec(std::string term, std::vector<double> scores) {
  PerturbationVector v;
  v.term = std::move(term);
  v.scores = std::move(scores);
  return v;
}

TEST(BuildVector, UnknownTermReproducesBaselines) {
  MockLexicon lex;
  lex.name = "empty";
  lex.bias = -1.0;
  MockScorer scorer(lex);
  TemplateSet templates = TemplateSet::builtin();
  PerturbationVector a = build_vector("aardvark", templates, scorer);
  PerturbationVector b = build_vector("zebra", templates, scorer);
  ASSERT_EQ(a.scores.size(), 33u);
  // A scorer that knows neither term gives both the same profile.
  EXPECT_EQ(a.scores, b.scores);
}

TEST(BuildVector, SaturatingTermPushesEverythingHigh) {
  MockLexicon lex;
  lex.name = "sat";
  lex.bias = -2.0;
  lex.weights["meanword"] = 10.0;
  MockScorer scorer(lex);
  PerturbationVector v = build_vector("meanword", TemplateSet::builtin(), scorer);
  for (double s : v.scores) EXPECT_GT(s, 0.99);
}

class ExplodingScorer : public Scorer {
 public:
  double score(const std::string& text) override {
    if (text.find("badterm") != std::string::npos)
      throw RemoteScorerError("refused");
    return 0.5;
  }
  std::string id() const override { return "exploding"; }
};

TEST(BuildVector, AnyFailureAbortsTheVector) {
  ExplodingScorer scorer;
  EXPECT_THROW(build_vector("badterm", TemplateSet::builtin(), scorer),
               RemoteScorerError);
}

TEST(BuildVectors, DropsFailingTermsWithDiagnostics) {
  ExplodingScorer scorer;
  std::vector<std::string> diags;
  auto out = build_vectors({"goodterm", "badterm", "otherterm"}, TemplateSet::builtin(),
                           scorer, {}, &diags);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].term, "goodterm");
  EXPECT_EQ(out[1].term, "otherterm");
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].find("badterm"), std::string::npos);
}

TEST(KMeans, RefusesBadArguments) {
  std::vector<PerturbationVector> pts = {vec("a", {0.0, 0.0}), vec("b", {1.0, 1.0})};
  EXPECT_THROW(kmeans_fit(pts, 0, 1), ConfigError);
  EXPECT_THROW(kmeans_fit(pts, 3, 1), InputError);       // k > n
  EXPECT_THROW(kmeans_fit({}, 1, 1), InputError);
  std::vector<PerturbationVector> dup = {vec("a", {0.0}), vec("a", {1.0})};
  EXPECT_THROW(kmeans_fit(dup, 1, 1), InputError);       // duplicate term
  std::vector<PerturbationVector> ragged = {vec("a", {0.0}), vec("b", {1.0, 2.0})};
  EXPECT_THROW(kmeans_fit(ragged, 1, 1), InputError);
}

TEST(KMeans, OneClusterPerPointHasZeroInertia) {
  std::vector<PerturbationVector> pts = {vec("a", {0.1, 0.2}), vec("b", {0.5, 0.6}),
                                         vec("c", {0.9, 0.1})};
  ClusterModel m = kmeans_fit(pts, 3, 7);
  EXPECT_EQ(m.k, 3);
  EXPECT_DOUBLE_EQ(m.inertia, 0.0);
  std::set<int> used;
  for (const auto& [term, c] : m.assignments) used.insert(c);
  EXPECT_EQ(used.size(), 3u);
}

TEST(KMeans, TwoBlobsReachTheExhaustiveOptimum) {
  // Two well-separated blobs of six points each in 3-d.
  std::vector<PerturbationVector> pts;
  std::vector<std::vector<double>> raw;
  DetEngine eng(31);
  for (int i = 0; i < 12; ++i) {
    const double base = i < 6 ? 0.15 : 0.8;
    std::vector<double> p = {base + 0.02 * unit_double(eng()),
                             base + 0.02 * unit_double(eng()),
                             base + 0.02 * unit_double(eng())};
    raw.push_back(p);
    pts.push_back(vec(testsupport::coded_name("pt", i), p));
  }
  const double best = testsupport::best_two_cluster_sse(raw);
  for (uint64_t seed : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) {
    ClusterModel m = kmeans_fit(pts, 2, seed);
    EXPECT_NEAR(m.inertia, best, 1e-9) << "seed " << seed;
    // Blob purity: the first six points share a label, the rest the other.
    const int c0 = m.assignments.at(pts[0].term);
    for (int i = 1; i < 6; ++i) EXPECT_EQ(m.assignments.at(pts[i].term), c0);
    for (int i = 6; i < 12; ++i) EXPECT_NE(m.assignments.at(pts[i].term), c0);
  }
}

TEST(KMeans, InertiaEqualsRecomputedObjective) {
  std::vector<PerturbationVector> pts;
  DetEngine eng(17);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> p(5);
    for (auto& x : p) x = unit_double(eng());
    pts.push_back(vec(testsupport::coded_name("pt", i), p));
  }
  ClusterModel m = kmeans_fit(pts, 4, 3);
  double sse = 0.0;
  for (const auto& v : pts) {
    const auto& c = m.centroids[static_cast<size_t>(m.assignments.at(v.term))];
    for (size_t j = 0; j < v.scores.size(); ++j) {
      const double d = v.scores[j] - c[j];
      sse += d * d;
    }
  }
  EXPECT_NEAR(m.inertia, sse, 1e-9);
  // Every point sits with its nearest centroid.
  for (const auto& v : pts) {
    const int mine = m.assignments.at(v.term);
    double dmine = 0.0;
    for (size_t j = 0; j < v.scores.size(); ++j) {
      const double d = v.scores[j] - m.centroids[static_cast<size_t>(mine)][j];
      dmine += d * d;
    }
    for (int c = 0; c < m.k; ++c) {
      double dc = 0.0;
      for (size_t j = 0; j < v.scores.size(); ++j) {
        const double d = v.scores[j] - m.centroids[static_cast<size_t>(c)][j];
        dc += d * d;
      }
      EXPECT_GE(dc + 1e-12, dmine) << v.term << " c=" << c;
    }
  }
}

TEST(KMeans, BitReproducibleForTheSameSeed) {
  std::vector<PerturbationVector> pts;
  DetEngine eng(23);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> p(4);
    for (auto& x : p) x = unit_double(eng());
    pts.push_back(vec(testsupport::coded_name("pt", i), p));
  }
  ClusterModel a = kmeans_fit(pts, 3, 99);
  ClusterModel b = kmeans_fit(pts, 3, 99);
  EXPECT_EQ(a.centroids, b.centroids);  // bit-for-bit
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, InputOrderDoesNotMatter) {
  std::vector<PerturbationVector> pts;
  DetEngine eng(29);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> p(4);
    for (auto& x : p) x = unit_double(eng());
    pts.push_back(vec(testsupport::coded_name("pt", i), p));
  }
  ClusterModel a = kmeans_fit(pts, 3, 5);

  std::vector<PerturbationVector> shuffled = pts;
  std::shuffle(shuffled.begin(), shuffled.end(), eng);
  ClusterModel b = kmeans_fit(shuffled, 3, 5);

  // Same partition of terms and the same centroid set, bit-for-bit, up to
  // cluster relabeling.
  std::set<std::vector<double>> ca(a.centroids.begin(), a.centroids.end());
  std::set<std::vector<double>> cb(b.centroids.begin(), b.centroids.end());
  EXPECT_EQ(ca, cb);
  EXPECT_EQ(a.inertia, b.inertia);
  for (const auto& [term, cluster] : a.assignments) {
    EXPECT_EQ(a.centroids[static_cast<size_t>(cluster)],
              b.centroids[static_cast<size_t>(b.assignments.at(term))])
        << term;
  }
}

TEST(KMeans, HandlesDuplicatePointsWithoutEmptyClusters) {
  // More clusters than distinct locations force the duplicate fallback and
  // the empty-cluster repair to do something sensible.
  std::vector<PerturbationVector> pts = {
      vec("a", {0.1, 0.1}), vec("b", {0.1, 0.1}), vec("c", {0.1, 0.1}),
      vec("d", {0.1, 0.1}), vec("e", {0.9, 0.9}),
  };
  ClusterModel m = kmeans_fit(pts, 3, 1);
  EXPECT_EQ(m.k, 3);
  EXPECT_EQ(m.assignments.size(), 5u);
  for (const auto& [_, c] : m.assignments) {
    EXPECT_GE(c, 0);
    EXPECT_LT(c, 3);
  }
}

TEST(ScanK, InertiaIsNonIncreasingInK) {
  std::vector<PerturbationVector> pts;
  DetEngine eng(41);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> p(6);
    for (auto& x : p) x = unit_double(eng());
    pts.push_back(vec(testsupport::coded_name("pt", i), p));
  }
  auto rows = scan_k(pts, 2, 8, 7);
  ASSERT_EQ(rows.size(), 7u);
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].k, static_cast<int>(i) + 2);
    EXPECT_GE(rows[i].inertia, 0.0);
    // Single-restart fits can blip, but more clusters must broadly win.
    if (i) EXPECT_LT(rows[i].inertia, rows[0].inertia);
  }
  EXPECT_LT(rows.back().inertia, 0.75 * rows.front().inertia);
}

TEST(ClusterProfile, SeriesAreSortedAndComplete) {
  TemplateSet templates = TemplateSet::builtin();
  MockLexicon lex;
  lex.name = "p";
  lex.bias = -2.0;
  lex.weights["saturating"] = 9.0;
  MockScorer scorer(lex);
  std::vector<PerturbationVector> pts = {
      build_vector("saturating", templates, scorer),
      build_vector("harmless", templates, scorer),
  };
  ClusterModel m = kmeans_fit(pts, 2, 1);
  auto series = cluster_profile(m, templates, pts);
  ASSERT_EQ(series.size(), 2u);
  for (const auto& s : series) {
    ASSERT_EQ(s.points.size(), templates.size());
    for (size_t i = 1; i < s.points.size(); ++i)
      EXPECT_GE(s.points[i].first, s.points[i - 1].first);  // baseline ascending
    ASSERT_EQ(s.members.size(), 1u);
  }
  // The saturating term's centroid stays high across every baseline.
  for (const auto& s : series) {
    if (s.members[0].first != "saturating") continue;
    for (const auto& [baseline, centroid] : s.points) EXPECT_GT(centroid, 0.99);
  }
}

TEST(Writers, AssignmentsAndProfileAreStableCsv) {
  std::vector<PerturbationVector> pts = {vec("beta", {0.2, 0.4}), vec("alpha", {0.9, 0.8})};
  ClusterModel m = kmeans_fit(pts, 2, 1);
  TemplateSet two;
  two.templates = {Template{"x {person}", 0.25}, Template{"y {person}", 0.75}};
  auto series = cluster_profile(m, two, pts);
  std::ostringstream assign_os, profile_os;
  write_assignments(assign_os, series);
  write_profile(profile_os, series);
  const std::string assign = assign_os.str();
  EXPECT_NE(assign.find("term,cluster,distance"), std::string::npos);
  EXPECT_NE(assign.find("alpha"), std::string::npos);
  EXPECT_NE(assign.find("beta"), std::string::npos);
  const std::string profile = profile_os.str();
  EXPECT_NE(profile.find("cluster,baseline,centroid_score"), std::string::npos);
  EXPECT_NE(profile.find("0.25"), std::string::npos);
}

TEST(FilterPos, KeepsMajorityNominalTerms) {
  std::vector<Document> docs;
  auto tagged = [&](const std::string& id, const std::string& text,
                    std::vector<std::string> tags) {
    Document d = testsupport::make_doc(id, text, "AA", 0.5);
    d.pos_tags = std::move(tags);
    docs.push_back(d);
  };
  // "report" appears 3 times nominal, once verbal; "run" is always a verb.
  tagged("1", "the report is out", {"DET", "NOUN", "VERB", "ADV"});
  tagged("2", "they report it", {"PRON", "VERB", "PRON"});
  tagged("3", "a report and a run", {"DET", "NOUN", "CCONJ", "DET", "VERB"});
  tagged("4", "this report rocks", {"DET", "PROPN", "VERB"});
  NormalizationConfig cfg;
  auto kept = filter_pos({"report", "run", "absent"}, docs, cfg);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], "report");
}

TEST(FilterPos, DisabledPassesEverythingThrough) {
  std::vector<Document> docs;  // no tags anywhere
  docs.push_back(testsupport::make_doc("1", "x", "AA", 0.5));
  NormalizationConfig cfg;
  auto kept = filter_pos({"a", "b"}, docs, cfg, false);
  EXPECT_EQ(kept, (std::vector<std::string>{"a", "b"}));
}

TEST(FilterPos, RequiresTagsSomewhere) {
  std::vector<Document> docs;
  docs.push_back(testsupport::make_doc("1", "x y", "AA", 0.5));
  NormalizationConfig cfg;
  EXPECT_THROW(filter_pos({"x"}, docs, cfg), InputError);
}

TEST(FilterPos, RejectsMisalignedTags) {
  Document d = testsupport::make_doc("1", "two tokens", "AA", 0.5);
  d.pos_tags = std::vector<std::string>{"NOUN"};
  std::vector<Document> docs = {d};
  NormalizationConfig cfg;
  EXPECT_THROW(filter_pos({"two"}, docs, cfg), InputError);
}

}  // namespace
