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

#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "geolex/document.hpp"
#include "geolex/rng.hpp"
#include "geolex/term_counts.hpp"

namespace geolex {

enum class LabelMode { kModelScore, kGold };

// Classifies one document as toxic. Threshold comparison is inclusive
// (score >= threshold is toxic). Falls back to the other signal when the
// preferred one is absent; errors only when neither exists.
inline bool label_toxic(const Document& doc, double threshold,
                        LabelMode mode = LabelMode::kModelScore) {
  const bool has_score = doc.model_score.has_value();
  const bool has_gold = doc.gold_label.has_value();
  if (!has_score && !has_gold)
    throw InputError("unlabeled document: " + doc.id);
  if (mode == LabelMode::kGold)
    return has_gold ? *doc.gold_label : (*doc.model_score >= threshold);
  return has_score ? (*doc.model_score >= threshold) : *doc.gold_label;
}

inline TermCounts count_terms(std::span<const Document> docs,
                              const NormalizationConfig& cfg) {
  TermCounts tc;
  for (const auto& d : docs) tc.add_document(document_terms(d, cfg));
  return tc;
}

// Shard-parallel counting: contiguous shards counted independently, merged
// in shard order. Merge commutativity makes the result identical to the
// single-pass table.
inline TermCounts count_terms_parallel(std::span<const Document> docs,
                                       const NormalizationConfig& cfg,
                                       unsigned num_shards) {
  if (num_shards <= 1 || docs.size() < 2) return count_terms(docs, cfg);
  if (num_shards > docs.size()) num_shards = static_cast<unsigned>(docs.size());
  std::vector<TermCounts> shards(num_shards);
  std::vector<std::thread> workers;
  workers.reserve(num_shards);
  const size_t per = docs.size() / num_shards;
  const size_t extra = docs.size() % num_shards;
  size_t begin = 0;
  for (unsigned s = 0; s < num_shards; ++s) {
    size_t len = per + (s < extra ? 1 : 0);
    auto slice = docs.subspan(begin, len);
    begin += len;
    workers.emplace_back([slice, &cfg, &shards, s] { shards[s] = count_terms(slice, cfg); });
  }
  for (auto& w : workers) w.join();
  TermCounts out;
  for (auto& sh : shards) out.merge(sh);
  return out;
}

// Per-country toxic/nontoxic split. Toxic documents keep their tokenized
// form so the balanced corpus can be recounted from a seeded sample.
struct CountryCell {
  TermCounts toxic;
  TermCounts nontoxic;
  std::vector<std::string> toxic_doc_ids;
  std::vector<std::vector<std::string>> toxic_doc_terms;  // aligned with ids
};

struct CountryPartition {
  std::map<std::string, CountryCell> countries;  // ordered for determinism
  double threshold = 0.5;
  LabelMode mode = LabelMode::kModelScore;
};

inline CountryPartition build_partition(std::span<const Document> docs,
                                        const NormalizationConfig& cfg,
                                        double threshold = 0.5,
                                        LabelMode mode = LabelMode::kModelScore) {
  CountryPartition part;
  part.threshold = threshold;
  part.mode = mode;
  for (const auto& doc : docs) {
    auto terms = document_terms(doc, cfg);
    CountryCell& cell = part.countries[doc.country];
    if (label_toxic(doc, threshold, mode)) {
      cell.toxic.add_document(terms);
      cell.toxic_doc_ids.push_back(doc.id);
      cell.toxic_doc_terms.push_back(std::move(terms));
    } else {
      cell.nontoxic.add_document(terms);
    }
  }
  return part;
}

struct BalancedCorpus {
  std::map<std::string, TermCounts> per_country;
  TermCounts global;
  uint64_t docs_per_country = 0;
};

// Equal-size toxic sample per country, matching the country with the fewest
// toxic documents; sampled without replacement from `seed`. The global table
// is the merge of the per-country tables.
inline BalancedCorpus build_balanced_toxic_corpus(const CountryPartition& part,
                                                  uint64_t seed) {
  if (part.countries.empty()) throw InputError("no documents: empty partition");
  uint64_t min_docs = UINT64_MAX;
  for (const auto& [country, cell] : part.countries) {
    if (cell.toxic.doc_count == 0)
      throw InputError("country " + country + " has zero toxic documents");
    min_docs = std::min(min_docs, cell.toxic.doc_count);
  }
  BalancedCorpus out;
  out.docs_per_country = min_docs;
  for (const auto& [country, cell] : part.countries) {
    DetEngine eng(stable_hash64_combine(seed, stable_hash64(country)));
    auto picks = sample_without_replacement(cell.toxic_doc_terms.size(),
                                            static_cast<size_t>(min_docs), eng);
    TermCounts tc;
    for (size_t i : picks) tc.add_document(cell.toxic_doc_terms[i]);
    out.global.merge(tc);
    out.per_country.emplace(country, std::move(tc));
  }
  return out;
}

}  // namespace geolex
