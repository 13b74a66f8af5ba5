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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geolex/corpus.hpp"
#include "geolex/special_functions.hpp"
#include "geolex/term_counts.hpp"

namespace geolex {

// Which statistic decides "overrepresented in toxic text" and which decides
// "salient to this country". The defaults are the primary method; the
// alternates exist for comparison runs.
enum class ToxicityTest { kDirichletLogOdds, kBetaPosterior };
enum class GeoTest { kBetaPosterior, kOneVsRestLogOdds };

struct SaliencyConfig {
  double prior_strength = 100.0;  // alpha_0, pseudo-token budget of the prior
  double z_threshold = 1.96;
  double p_threshold = 0.05;
  uint64_t min_count = 5;  // floor on the term's count in the country's toxic corpus
  bool lower_tail_reading = false;  // literal CDF <= p reading of the geo test
  ToxicityTest toxicity_test = ToxicityTest::kDirichletLogOdds;
  GeoTest geo_test = GeoTest::kBetaPosterior;

  void validate() const {
    if (!(prior_strength > 0.0)) throw ConfigError("prior_strength must be > 0");
    if (!(p_threshold > 0.0 && p_threshold < 1.0))
      throw ConfigError("p_threshold must lie in (0,1)");
  }
};

struct LogOddsResult {
  std::string term;
  double delta = 0.0;     // log-odds-ratio point estimate
  double variance = 0.0;  // approximate variance of delta
  double z = 0.0;         // delta / sqrt(variance)
};

// Log-odds ratio of term frequency between two corpora under a Dirichlet
// informed prior. y1/y2 are the term's counts, n1/n2 the corpus token
// totals, alpha_w the term's prior pseudo-count, alpha0 the total prior mass.
inline LogOddsResult log_odds_stats(double y1, double n1, double y2, double n2,
                                    double alpha_w, double alpha0) {
  LogOddsResult r;
  r.delta = std::log((y1 + alpha_w) / (n1 + alpha0 - y1 - alpha_w)) -
            std::log((y2 + alpha_w) / (n2 + alpha0 - y2 - alpha_w));
  r.variance = 1.0 / (y1 + alpha_w) + 1.0 / (y2 + alpha_w);
  r.z = r.delta / std::sqrt(r.variance);
  return r;
}

// Per-term prior mass: alpha_0 scaled by the term's background frequency,
// floored at one background occurrence so unseen terms stay smoothed.
inline double term_prior(const TermCounts& background, const std::string& term,
                         double alpha0) {
  const double total = static_cast<double>(background.total_tokens);
  const double cnt = static_cast<double>(background.count(term));
  return alpha0 * std::max(cnt, 1.0) / total;
}

// One result per term in the union vocabulary of the two corpora, sorted by
// term. Corpus 1 is conventionally the toxic side, so positive z means
// overrepresented in toxic text.
inline std::vector<LogOddsResult> dirichlet_log_odds(const TermCounts& toxic,
                                                     const TermCounts& nontoxic,
                                                     const TermCounts& background,
                                                     const SaliencyConfig& cfg) {
  cfg.validate();
  if (toxic.total_tokens == 0 || nontoxic.total_tokens == 0)
    throw InputError("dirichlet_log_odds: zero-total corpus");
  if (background.total_tokens == 0)
    throw InputError("dirichlet_log_odds: zero-total background corpus");

  std::set<std::string> vocab;
  for (const auto& [t, _] : toxic.counts) vocab.insert(t);
  for (const auto& [t, _] : nontoxic.counts) vocab.insert(t);

  const double n1 = static_cast<double>(toxic.total_tokens);
  const double n2 = static_cast<double>(nontoxic.total_tokens);
  std::vector<LogOddsResult> out;
  out.reserve(vocab.size());
  for (const auto& term : vocab) {
    const double aw = term_prior(background, term, cfg.prior_strength);
    LogOddsResult r = log_odds_stats(static_cast<double>(toxic.count(term)), n1,
                                     static_cast<double>(nontoxic.count(term)), n2,
                                     aw, cfg.prior_strength);
    r.term = term;
    out.push_back(std::move(r));
  }
  return out;
}

struct OverrepResult {
  std::string term;
  std::string country;
  uint64_t k_global = 0;   // count of the term in the balanced global corpus
  uint64_t n_global = 0;   // token total of the balanced global corpus
  uint64_t k_country = 0;  // count of the term in this country's balanced slice
  uint64_t n_country = 0;  // token total of this country's balanced slice
  double tail_prob = 1.0;  // P(f > k_country/n_country) under Beta(k_global, n_global-k_global)

  bool significant(const SaliencyConfig& cfg) const {
    return cfg.lower_tail_reading ? (1.0 - tail_prob) <= cfg.p_threshold
                                  : tail_prob <= cfg.p_threshold;
  }
};

// Non-informative-prior posterior Beta(k_i, N-k_i) over the term's global
// frequency, evaluated at the country's observed frequency. Degenerate
// posteriors (k_i = 0 or k_i = N) yield nullopt; callers log and skip.
inline std::optional<OverrepResult> overrepresentation_test(
    const std::string& term, const std::string& country, uint64_t k_global,
    uint64_t n_global, uint64_t k_country, uint64_t n_country,
    const SaliencyConfig& cfg) {
  cfg.validate();
  if (k_country > n_country || k_global > n_global)
    throw InputError("overrepresentation_test: count exceeds corpus total for " + term);
  if (n_country == 0) throw InputError("overrepresentation_test: empty country corpus");
  if (k_global == 0 || k_global == n_global) return std::nullopt;

  OverrepResult r;
  r.term = term;
  r.country = country;
  r.k_global = k_global;
  r.n_global = n_global;
  r.k_country = k_country;
  r.n_country = n_country;
  const double f = static_cast<double>(k_country) / static_cast<double>(n_country);
  const double cdf = beta_cdf(static_cast<double>(k_global),
                              static_cast<double>(n_global - k_global), f);
  r.tail_prob = 1.0 - cdf;
  return r;
}

struct CandidateTerm {
  std::string term;
  std::string country;
  double z = 0.0;
  double delta = 0.0;
  double variance = 0.0;
  double tail_prob = 1.0;
  int rank = 0;
};

using CandidateMap = std::map<std::string, std::vector<CandidateTerm>>;

namespace detail {

// Geographic-salience gate for one (term, country) pair.
inline bool geo_significant(const std::string& term, const std::string& country,
                            const BalancedCorpus& balanced, const SaliencyConfig& cfg,
                            double* tail_prob_out, std::vector<std::string>* diagnostics) {
  const TermCounts& mine = balanced.per_country.at(country);
  const uint64_t k_ij = mine.count(term);
  const uint64_t k_i = balanced.global.count(term);
  if (cfg.geo_test == GeoTest::kOneVsRestLogOdds) {
    const double aw = term_prior(balanced.global, term, cfg.prior_strength);
    LogOddsResult r = log_odds_stats(
        static_cast<double>(k_ij), static_cast<double>(mine.total_tokens),
        static_cast<double>(k_i - k_ij),
        static_cast<double>(balanced.global.total_tokens - mine.total_tokens), aw,
        cfg.prior_strength);
    *tail_prob_out = r.z >= cfg.z_threshold ? 0.0 : 1.0;
    return r.z >= cfg.z_threshold;
  }
  auto res = overrepresentation_test(term, country, k_i, balanced.global.total_tokens,
                                     k_ij, mine.total_tokens, cfg);
  if (!res) {
    if (diagnostics)
      diagnostics->push_back("skipped degenerate posterior for term '" + term +
                             "' in country " + country);
    return false;
  }
  *tail_prob_out = res->tail_prob;
  return res->significant(cfg);
}

// Toxic-vs-nontoxic gate via the multi-group statistic instead of log-odds
// (the comparison variant): posterior over the term's frequency in the
// country's combined corpus, evaluated at its toxic-slice frequency.
inline bool beta_toxicity_significant(const std::string& term, const CountryCell& cell,
                                      const SaliencyConfig& cfg, double* z_out) {
  TermCounts combined = merge(cell.toxic, cell.nontoxic);
  auto res = overrepresentation_test(term, "", combined.count(term),
                                     combined.total_tokens, cell.toxic.count(term),
                                     cell.toxic.total_tokens, cfg);
  if (!res) return false;
  *z_out = -res->tail_prob;  // rank by smallness of the tail
  return res->tail_prob <= cfg.p_threshold;
}

}  // namespace detail

// Phase 1: per country, the terms overrepresented in its toxic text that are
// also geographically salient per the balanced multi-group test. Ranked by z
// descending.
inline CandidateMap phase1_select(const CountryPartition& part,
                                  const BalancedCorpus& balanced,
                                  const SaliencyConfig& cfg,
                                  std::vector<std::string>* diagnostics = nullptr) {
  cfg.validate();
  CandidateMap out;
  for (const auto& [country, cell] : part.countries) {
    std::vector<CandidateTerm> picked;
    if (cell.toxic.total_tokens == 0 || cell.nontoxic.total_tokens == 0) {
      if (diagnostics)
        diagnostics->push_back("country " + country +
                               " lacks a non-empty toxic/nontoxic split; skipped");
      out.emplace(country, std::move(picked));
      continue;
    }
    const TermCounts background = merge(cell.toxic, cell.nontoxic);
    std::vector<LogOddsResult> lo =
        dirichlet_log_odds(cell.toxic, cell.nontoxic, background, cfg);
    for (const auto& r : lo) {
      if (cell.toxic.count(r.term) < cfg.min_count) continue;
      double z = r.z;
      if (cfg.toxicity_test == ToxicityTest::kBetaPosterior) {
        if (!detail::beta_toxicity_significant(r.term, cell, cfg, &z)) continue;
      } else if (r.z < cfg.z_threshold) {
        continue;
      }
      double tail = 1.0;
      if (!detail::geo_significant(r.term, country, balanced, cfg, &tail, diagnostics))
        continue;
      CandidateTerm c;
      c.term = r.term;
      c.country = country;
      c.z = z;
      c.delta = r.delta;
      c.variance = r.variance;
      c.tail_prob = tail;
      picked.push_back(std::move(c));
    }
    std::sort(picked.begin(), picked.end(), [](const CandidateTerm& a, const CandidateTerm& b) {
      if (a.z != b.z) return a.z > b.z;
      return a.term < b.term;
    });
    for (size_t i = 0; i < picked.size(); ++i) picked[i].rank = static_cast<int>(i) + 1;
    out.emplace(country, std::move(picked));
  }
  return out;
}

inline void write_candidates(std::ostream& os, const std::vector<CandidateTerm>& rows) {
  os << "term\tcountry\tz\tdelta\tvariance\ttail_prob\trank\n";
  for (const auto& c : rows) {
    os << c.term << "\t" << c.country << "\t" << format_double(c.z) << "\t"
       << format_double(c.delta) << "\t" << format_double(c.variance) << "\t"
       << format_double(c.tail_prob) << "\t" << c.rank << "\n";
  }
}

inline std::vector<CandidateTerm> read_candidates(std::istream& is) {
  std::vector<CandidateTerm> rows;
  std::string line;
  if (!std::getline(is, line) || line.rfind("term\tcountry", 0) != 0)
    throw InputError("candidate table missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cols = split_char(line, '\t');
    if (cols.size() != 7) throw InputError("malformed candidate row: " + line);
    CandidateTerm c;
    c.term = std::string(cols[0]);
    c.country = std::string(cols[1]);
    c.z = parse_double(cols[2], "candidate z");
    c.delta = parse_double(cols[3], "candidate delta");
    c.variance = parse_double(cols[4], "candidate variance");
    c.tail_prob = parse_double(cols[5], "candidate tail_prob");
    c.rank = static_cast<int>(parse_int(cols[6], "candidate rank"));
    rows.push_back(std::move(c));
  }
  return rows;
}

}  // namespace geolex
