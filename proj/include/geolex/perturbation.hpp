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

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geolex/document.hpp"
#include "geolex/hash.hpp"
#include "geolex/scorer.hpp"
#include "geolex/templates.hpp"

namespace geolex {

struct PerturbationVector {
  std::string term;
  std::vector<double> scores;

  void validate(size_t d) const {
    if (scores.size() != d)
      throw InputError("perturbation vector for '" + term + "' has " +
                       std::to_string(scores.size()) + " entries, expected " +
                       std::to_string(d));
    for (double s : scores)
      if (!(s >= 0.0 && s <= 1.0))
        throw InputError("perturbation score outside [0,1] for term " + term);
  }
};

// Scores every template instantiated with the term. Throws on any scoring
// failure; partial vectors are never produced.
inline PerturbationVector build_vector(const std::string& term,
                                       const TemplateSet& templates, Scorer& scorer,
                                       const BatchOptions& opts = {}) {
  templates.validate();
  std::vector<std::string> texts;
  texts.reserve(templates.size());
  for (const auto& t : templates.templates) texts.push_back(instantiate(t, term));
  auto outcomes = score_batch(scorer, texts, opts);
  PerturbationVector v;
  v.term = term;
  v.scores.reserve(outcomes.size());
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok())
      throw RemoteScorerError("scoring failed for term '" + term + "' on template " +
                              std::to_string(i) + ": " + outcomes[i].error);
    v.scores.push_back(*outcomes[i].score);
  }
  v.validate(templates.size());
  return v;
}

// One vector per term; terms whose scoring failed are dropped and reported in
// diagnostics instead of aborting the run.
inline std::vector<PerturbationVector> build_vectors(
    const std::vector<std::string>& terms, const TemplateSet& templates, Scorer& scorer,
    const BatchOptions& opts = {}, std::vector<std::string>* diagnostics = nullptr) {
  std::vector<PerturbationVector> out;
  out.reserve(terms.size());
  for (const auto& term : terms) {
    try {
      out.push_back(build_vector(term, templates, scorer, opts));
    } catch (const Error& e) {
      if (diagnostics)
        diagnostics->push_back("dropped term '" + term + "': " + e.what());
    }
  }
  return out;
}

struct ClusterModel {
  int k = 0;
  std::vector<std::vector<double>> centroids;
  std::map<std::string, int> assignments;
  double inertia = 0.0;
  uint64_t seed = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Canonical processing order: by vector content, then term. Reductions over
// this order make the fit independent of input ordering.
inline std::vector<size_t> canonical_order(const std::vector<PerturbationVector>& vs) {
  std::vector<size_t> idx(vs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (vs[a].scores != vs[b].scores) return vs[a].scores < vs[b].scores;
    return vs[a].term < vs[b].term;
  });
  return idx;
}

inline uint64_t content_hash(const PerturbationVector& v) {
  return stable_hash64_combine(stable_hash64_doubles(v.scores.data(), v.scores.size(), 0),
                               stable_hash64(v.term));
}

// Weighted reservoir key per Efraimidis-Spirakis: the argmax of log(u)/w is a
// draw proportional to w. u comes from a hash of (seed, round, content), so
// the draw ignores input order.
inline double sample_key(uint64_t seed, uint64_t round, uint64_t item_hash, double weight) {
  if (!(weight > 0.0)) return -std::numeric_limits<double>::infinity();
  const double u =
      unit_double(stable_hash64_combine(stable_hash64_combine(seed, round), item_hash));
  return std::log(u) / weight;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a given seed
// and invariant under permutation of the input vectors.
inline ClusterModel kmeans_fit(const std::vector<PerturbationVector>& vectors, int k,
                               uint64_t seed, int max_iters = 300, double tol = 1e-6) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (static_cast<size_t>(k) > vectors.size())
    throw InputError("k exceeds number of vectors (" + std::to_string(k) + " > " +
                     std::to_string(vectors.size()) + ")");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  const size_t d = vectors.front().scores.size();
  for (const auto& v : vectors) {
    if (v.scores.size() != d)
      throw InputError("vectors differ in dimensionality at term " + v.term);
    for (double s : v.scores)
      if (!std::isfinite(s))
        throw InputError("non-finite vector entry for term " + v.term);
  }
  {
    std::map<std::string, int> seen;
    for (const auto& v : vectors)
      if (++seen[v.term] > 1) throw InputError("duplicate term in vectors: " + v.term);
  }

  const std::vector<size_t> order = detail::canonical_order(vectors);
  std::vector<uint64_t> hashes(vectors.size());
  for (size_t i : order) hashes[i] = detail::content_hash(vectors[i]);

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  std::vector<double> d2(vectors.size(), std::numeric_limits<double>::infinity());
  for (int c = 0; c < k; ++c) {
    size_t best = vectors.size();
    double best_key = -std::numeric_limits<double>::infinity();
    for (size_t i : order) {
      const double w = c == 0 ? 1.0 : d2[i];
      const double key = detail::sample_key(seed, static_cast<uint64_t>(c), hashes[i], w);
      if (key > best_key) {
        best_key = key;
        best = i;
      }
    }
    if (best == vectors.size()) {
      // All remaining weights zero: duplicates of chosen centers. Take the
      // first unchosen point in canonical order.
      for (size_t i : order) {
        bool already = false;
        for (const auto& cen : centroids)
          if (cen == vectors[i].scores) { already = true; break; }
        if (!already) { best = i; break; }
      }
      if (best == vectors.size()) best = order[static_cast<size_t>(c) % order.size()];
    }
    centroids.push_back(vectors[best].scores);
    for (size_t i : order)
      d2[i] = std::min(d2[i], detail::sq_dist(vectors[i].scores, centroids.back()));
  }

  std::vector<int> assign(vectors.size(), -1);
  auto assign_all = [&]() {
    for (size_t i : order) {
      int best_c = 0;
      double best_d = detail::sq_dist(vectors[i].scores, centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = detail::sq_dist(vectors[i].scores, centroids[static_cast<size_t>(c)]);
        if (dd < best_d) {
          best_d = dd;
          best_c = c;
        }
      }
      assign[i] = best_c;
    }
  };

  assign_all();
  for (int iter = 0; iter < max_iters; ++iter) {
    // Means accumulated in canonical order for bit-reproducibility.
    std::vector<std::vector<double>> sums(static_cast<size_t>(k),
                                          std::vector<double>(d, 0.0));
    std::vector<size_t> counts(static_cast<size_t>(k), 0);
    for (size_t i : order) {
      const auto c = static_cast<size_t>(assign[i]);
      ++counts[c];
      for (size_t j = 0; j < d; ++j) sums[c][j] += vectors[i].scores[j];
    }
    std::vector<std::vector<double>> next(static_cast<size_t>(k));
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
      if (counts[c] == 0) {
        next[c] = centroids[c];  // repaired below
        continue;
      }
      next[c].resize(d);
      for (size_t j = 0; j < d; ++j)
        next[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }

    // Empty clusters re-seed from the farthest point.
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
      if (counts[c] != 0) continue;
      size_t far = order[0];
      double far_d = -1.0;
      for (size_t i : order) {
        if (counts[static_cast<size_t>(assign[i])] <= 1) continue;
        const double dd =
            detail::sq_dist(vectors[i].scores, next[static_cast<size_t>(assign[i])]);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      --counts[static_cast<size_t>(assign[far])];
      next[c] = vectors[far].scores;
      counts[c] = 1;
      assign[far] = static_cast<int>(c);
    }

    double shift = 0.0;
    for (size_t c = 0; c < static_cast<size_t>(k); ++c)
      shift = std::max(shift, std::sqrt(detail::sq_dist(centroids[c], next[c])));
    centroids = std::move(next);
    assign_all();
    if (shift < tol) break;
  }

  ClusterModel model;
  model.k = k;
  model.centroids = std::move(centroids);
  model.seed = seed;
  double inertia = 0.0;
  for (size_t i : order)
    inertia +=
        detail::sq_dist(vectors[i].scores, model.centroids[static_cast<size_t>(assign[i])]);
  model.inertia = inertia;
  for (size_t i = 0; i < vectors.size(); ++i)
    model.assignments[vectors[i].term] = assign[i];
  return model;
}

struct KScanRow {
  int k = 0;
  double inertia = 0.0;
};

inline std::vector<KScanRow> scan_k(const std::vector<PerturbationVector>& vectors,
                                    int k_min, int k_max, uint64_t seed,
                                    int max_iters = 300, double tol = 1e-6) {
  if (k_min < 1 || k_max < k_min) throw ConfigError("invalid k range");
  std::vector<KScanRow> rows;
  for (int k = k_min; k <= k_max; ++k) {
    ClusterModel m = kmeans_fit(vectors, k, seed, max_iters, tol);
    rows.push_back({k, m.inertia});
  }
  return rows;
}

struct ClusterSeries {
  int cluster = 0;
  std::vector<std::pair<double, double>> points;  // (baseline, centroid score)
  std::vector<std::pair<std::string, double>> members;  // (term, distance)
};

// The plotting data: per cluster, centroid score against template baseline,
// plus members ordered by closeness to the centroid.
inline std::vector<ClusterSeries> cluster_profile(
    const ClusterModel& model, const TemplateSet& templates,
    const std::vector<PerturbationVector>& vectors) {
  templates.validate();
  std::vector<ClusterSeries> out;
  out.reserve(static_cast<size_t>(model.k));
  for (int c = 0; c < model.k; ++c) {
    ClusterSeries s;
    s.cluster = c;
    const auto& cen = model.centroids[static_cast<size_t>(c)];
    if (cen.size() != templates.size())
      throw InputError("cluster model dimensionality does not match template set");
    for (size_t i = 0; i < templates.size(); ++i)
      s.points.emplace_back(templates.templates[i].baseline_score, cen[i]);
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& v : vectors) {
      auto it = model.assignments.find(v.term);
      if (it == model.assignments.end() || it->second != c) continue;
      s.members.emplace_back(v.term, std::sqrt(detail::sq_dist(v.scores, cen)));
    }
    std::sort(s.members.begin(), s.members.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second < b.second;
      return a.first < b.first;
    });
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += "\"\"";
    else q += ch;
  }
  q += "\"";
  return q;
}
}  // namespace detail

inline void write_assignments(std::ostream& os, const std::vector<ClusterSeries>& series) {
  os << "term,cluster,distance\n";
  for (const auto& s : series)
    for (const auto& [term, dist] : s.members)
      os << detail::csv_field(term) << "," << s.cluster << "," << format_double(dist)
         << "\n";
}

inline void write_profile(std::ostream& os, const std::vector<ClusterSeries>& series) {
  os << "cluster,baseline,centroid_score\n";
  for (const auto& s : series)
    for (const auto& [baseline, score] : s.points)
      os << s.cluster << "," << format_double(baseline) << "," << format_double(score)
         << "\n";
}

// Keeps terms whose occurrences are majority-tagged NOUN or PROPN. Tags align
// positionally with the document's whitespace tokens (or with its lemmas when
// those drive normalization).
inline std::vector<std::string> filter_pos(const std::vector<std::string>& terms,
                                           std::span<const Document> docs,
                                           const NormalizationConfig& cfg,
                                           bool enabled = true) {
  if (!enabled) return terms;
  std::map<std::string, std::pair<uint64_t, uint64_t>> tally;  // term -> (nominal, total)
  for (const auto& t : terms) tally[t];
  size_t tagged_docs = 0;
  for (const auto& doc : docs) {
    if (!doc.pos_tags) continue;
    ++tagged_docs;
    const bool use_lemmas = cfg.lemmatizer == Lemmatizer::kPrecomputed;
    std::vector<std::string> toks;
    if (use_lemmas) {
      if (!doc.lemmas)
        throw InputError("document " + doc.id + " lacks lemmas for precomputed mode");
      toks = *doc.lemmas;
    } else {
      for (auto sv : split_whitespace(doc.text)) toks.emplace_back(sv);
    }
    if (toks.size() != doc.pos_tags->size())
      throw InputError("document " + doc.id + " pos_tags length " +
                       std::to_string(doc.pos_tags->size()) + " does not match " +
                       std::to_string(toks.size()) + " tokens");
    NormalizationConfig token_cfg = cfg;
    if (use_lemmas) token_cfg.lemmatizer = Lemmatizer::kIdentity;
    for (size_t i = 0; i < toks.size(); ++i) {
      auto norm = normalize_token(toks[i], token_cfg);
      if (!norm) continue;
      auto it = tally.find(*norm);
      if (it == tally.end()) continue;
      const std::string& tag = (*doc.pos_tags)[i];
      if (tag == "NOUN" || tag == "PROPN") ++it->second.first;
      ++it->second.second;
    }
  }
  if (tagged_docs == 0)
    throw InputError("part-of-speech filtering requested but no document carries pos_tags");
  std::vector<std::string> kept;
  for (const auto& t : terms) {
    const auto& [nominal, total] = tally[t];
    if (total > 0 && 2 * nominal > total) kept.push_back(t);
  }
  return kept;
}

}  // namespace geolex
