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
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geolex/error.hpp"
#include "geolex/hash.hpp"
#include "geolex/normalize.hpp"
#include "geolex/util.hpp"

namespace geolex {

struct LabeledExample {
  std::string id;
  std::string text;
  double toxicity_rating = 0.0;
  std::optional<std::string> country;

  bool is_toxic() const { return toxicity_rating >= 0.5; }

  void validate() const {
    if (id.empty()) throw InputError("labeled example with empty id");
    if (!(toxicity_rating >= 0.0 && toxicity_rating <= 1.0))
      throw InputError("toxicity_rating outside [0,1] for example " + id);
  }
};

inline LabeledExample example_from_json(const nlohmann::json& j) {
  LabeledExample ex;
  try {
    ex.id = j.at("id").get<std::string>();
    ex.text = j.at("text").get<std::string>();
    ex.toxicity_rating = j.at("toxicity_rating").get<double>();
    if (j.contains("country")) ex.country = j["country"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad labeled example: ") + e.what());
  }
  ex.validate();
  return ex;
}

inline nlohmann::json example_to_json(const LabeledExample& ex) {
  nlohmann::json j;
  j["id"] = ex.id;
  j["text"] = ex.text;
  j["toxicity_rating"] = ex.toxicity_rating;
  if (ex.country) j["country"] = *ex.country;
  return j;
}

inline std::vector<LabeledExample> read_examples(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open dataset: " + path);
  std::vector<LabeledExample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw InputError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_examples(const std::string& path,
                           std::span<const LabeledExample> examples) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write dataset: " + path);
  for (const auto& ex : examples) os << example_to_json(ex).dump() << "\n";
}

namespace detail {

inline std::set<std::string> term_set(const LabeledExample& ex,
                                      const NormalizationConfig& cfg) {
  std::set<std::string> s;
  for (auto& t : normalize(ex.text, cfg)) s.insert(std::move(t));
  return s;
}

}  // namespace detail

// Terms backed by enough labeled data on both sides to train against.
inline std::vector<std::string> eligible_terms(std::span<const LabeledExample> dataset,
                                               const std::vector<std::string>& candidates,
                                               const NormalizationConfig& cfg = {},
                                               uint64_t min_per_label = 10) {
  std::map<std::string, std::pair<uint64_t, uint64_t>> counts;  // term -> (toxic, nontoxic)
  for (const auto& c : candidates) counts[c];
  for (const auto& ex : dataset) {
    ex.validate();
    const auto toks = detail::term_set(ex, cfg);
    for (auto& [term, cnt] : counts) {
      if (!toks.count(term)) continue;
      if (ex.is_toxic()) ++cnt.first;
      else ++cnt.second;
    }
  }
  std::vector<std::string> out;
  for (const auto& c : candidates) {
    const auto& [t, nt] = counts[c];
    if (t >= min_per_label && nt >= min_per_label) out.push_back(c);
  }
  return out;
}

// Drops every instance containing any target term. Order preserved.
inline std::vector<LabeledExample> apply_deletion(std::span<const LabeledExample> dataset,
                                                  const std::vector<std::string>& terms,
                                                  const NormalizationConfig& cfg = {},
                                                  std::vector<std::string>* diagnostics = nullptr) {
  const std::set<std::string> targets(terms.begin(), terms.end());
  std::vector<LabeledExample> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset) {
    const auto toks = detail::term_set(ex, cfg);
    bool hit = false;
    for (const auto& t : toks)
      if (targets.count(t)) {
        hit = true;
        break;
      }
    if (!hit) out.push_back(ex);
  }
  if (out.empty() && !dataset.empty() && diagnostics)
    diagnostics->push_back("deletion removed every instance");
  return out;
}

// Replaces each raw token whose normalized form is a target term with the
// unk token, keeping the surrounding whitespace byte for byte.
inline std::string substitute_tokens(const std::string& text,
                                     const std::set<std::string>& targets,
                                     const std::string& unk_token,
                                     const NormalizationConfig& cfg) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (is_ascii_space(text[i])) {
      out.push_back(text[i]);
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    const std::string tok = text.substr(i, j - i);
    auto norm = normalize_token(tok, cfg);
    if (norm && targets.count(*norm)) out += unk_token;
    else out += tok;
    i = j;
  }
  return out;
}

inline std::vector<LabeledExample> apply_substitution(
    std::span<const LabeledExample> dataset, const std::vector<std::string>& terms,
    const std::string& unk_token = "<UNK>", const NormalizationConfig& cfg = {}) {
  if (unk_token.empty()) throw ConfigError("substitution requires a non-empty unk token");
  const std::set<std::string> targets(terms.begin(), terms.end());
  std::vector<LabeledExample> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset) {
    LabeledExample copy = ex;
    copy.text = substitute_tokens(ex.text, targets, unk_token, cfg);
    out.push_back(std::move(copy));
  }
  return out;
}

enum class QuotaFormula { kAsPrinted, kMinVariant };

struct TermSelectionStats {
  std::string term;
  uint64_t m = 0;  // toxic instances containing the term
  uint64_t n = 0;  // non-toxic instances containing the term
  uint64_t quota = 0;
  uint64_t taken_toxic = 0;
  uint64_t taken_nontoxic = 0;
};

struct BalancedSelection {
  std::vector<LabeledExample> examples;  // dataset order, deduplicated by id
  std::vector<TermSelectionStats> per_term;
  std::vector<std::string> diagnostics;
};

inline uint64_t balance_quota(uint64_t m, uint64_t n, uint64_t k,
                              QuotaFormula formula = QuotaFormula::kAsPrinted) {
  const uint64_t inner = std::min(m, n);
  return formula == QuotaFormula::kAsPrinted ? std::max(k, inner) : std::min(k, inner);
}

namespace detail {

// Uniform without-replacement draw of q indices, ranked by a hash keyed on
// (seed, term, instance id) so shards agree on the selection.
inline std::vector<size_t> hash_rank_sample(const std::vector<size_t>& pool,
                                            std::span<const LabeledExample> dataset,
                                            const std::string& term, uint64_t seed,
                                            uint64_t q) {
  std::vector<std::pair<uint64_t, size_t>> keyed;
  keyed.reserve(pool.size());
  for (size_t idx : pool) {
    uint64_t h = stable_hash64_combine(seed, stable_hash64(term));
    h = stable_hash64_combine(h, stable_hash64(dataset[idx].id));
    keyed.emplace_back(h, idx);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<size_t> out;
  const size_t take = static_cast<size_t>(std::min<uint64_t>(q, keyed.size()));
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back(keyed[i].second);
  return out;
}

}  // namespace detail

// Balance-and-tune selection for a set of target terms. Per term and label
// the quota is max(k, min(m, n)) (or the min variant), capped at availability
// with a diagnostic.
inline BalancedSelection select_balanced(std::span<const LabeledExample> dataset,
                                         const std::vector<std::string>& terms,
                                         uint64_t k, uint64_t seed,
                                         const NormalizationConfig& cfg = {},
                                         QuotaFormula formula = QuotaFormula::kAsPrinted) {
  if (k == 0) throw ConfigError("balance quota k must be positive");
  {
    std::set<std::string> ids;
    for (const auto& ex : dataset)
      if (!ids.insert(ex.id).second)
        throw InputError("duplicate instance id in dataset: " + ex.id);
  }
  BalancedSelection sel;
  std::set<size_t> chosen;
  for (const auto& term : terms) {
    std::vector<size_t> toxic_pool, nontoxic_pool;
    for (size_t i = 0; i < dataset.size(); ++i) {
      const auto toks = detail::term_set(dataset[i], cfg);
      if (!toks.count(term)) continue;
      (dataset[i].is_toxic() ? toxic_pool : nontoxic_pool).push_back(i);
    }
    TermSelectionStats st;
    st.term = term;
    st.m = toxic_pool.size();
    st.n = nontoxic_pool.size();
    st.quota = balance_quota(st.m, st.n, k, formula);
    const auto tox = detail::hash_rank_sample(toxic_pool, dataset, term, seed, st.quota);
    const auto non = detail::hash_rank_sample(nontoxic_pool, dataset, term, seed, st.quota);
    st.taken_toxic = tox.size();
    st.taken_nontoxic = non.size();
    if (st.taken_toxic < st.quota)
      sel.diagnostics.push_back("term '" + term + "': toxic availability " +
                                std::to_string(st.taken_toxic) + " below quota " +
                                std::to_string(st.quota));
    if (st.taken_nontoxic < st.quota)
      sel.diagnostics.push_back("term '" + term + "': non-toxic availability " +
                                std::to_string(st.taken_nontoxic) + " below quota " +
                                std::to_string(st.quota));
    for (size_t i : tox) chosen.insert(i);
    for (size_t i : non) chosen.insert(i);
    sel.per_term.push_back(st);
  }
  for (size_t i : chosen) sel.examples.push_back(dataset[i]);
  return sel;
}

enum class MitigationStrategy { kDeletion, kSubstitution, kBalanceTune };

inline MitigationStrategy parse_strategy(const std::string& s) {
  if (s == "deletion") return MitigationStrategy::kDeletion;
  if (s == "substitution") return MitigationStrategy::kSubstitution;
  if (s == "balance_tune") return MitigationStrategy::kBalanceTune;
  throw ConfigError("unknown mitigation strategy: " + s);
}

inline std::string strategy_name(MitigationStrategy s) {
  switch (s) {
    case MitigationStrategy::kDeletion: return "deletion";
    case MitigationStrategy::kSubstitution: return "substitution";
    case MitigationStrategy::kBalanceTune: return "balance_tune";
  }
  throw InternalError("unreachable strategy");
}

struct MitigationSpec {
  MitigationStrategy strategy = MitigationStrategy::kDeletion;
  std::vector<std::string> target_terms;
  std::string unk_token = "<UNK>";
  uint64_t k = 100;
  uint64_t seed = 0;
  QuotaFormula quota_formula = QuotaFormula::kAsPrinted;

  void validate() const {
    if (target_terms.empty()) throw ConfigError("mitigation requires target terms");
    if (strategy == MitigationStrategy::kSubstitution && unk_token.empty())
      throw ConfigError("substitution requires unk_token");
    if (strategy == MitigationStrategy::kBalanceTune && k == 0)
      throw ConfigError("balance_tune requires positive k");
  }
};

inline BalancedSelection apply_mitigation(const MitigationSpec& spec,
                                          std::span<const LabeledExample> dataset,
                                          const NormalizationConfig& cfg = {}) {
  spec.validate();
  BalancedSelection out;
  switch (spec.strategy) {
    case MitigationStrategy::kDeletion:
      out.examples = apply_deletion(dataset, spec.target_terms, cfg, &out.diagnostics);
      break;
    case MitigationStrategy::kSubstitution:
      out.examples = apply_substitution(dataset, spec.target_terms, spec.unk_token, cfg);
      break;
    case MitigationStrategy::kBalanceTune:
      out = select_balanced(dataset, spec.target_terms, spec.k, spec.seed, cfg,
                            spec.quota_formula);
      break;
  }
  return out;
}

}  // namespace geolex
