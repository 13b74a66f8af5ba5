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
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geolex/document.hpp"
#include "geolex/error.hpp"
#include "geolex/util.hpp"

namespace geolex {

struct LabeledScore {
  double score = 0.0;
  bool is_toxic = false;    // gold label
  bool in_subgroup = false; // contains the target term after normalization

  void validate() const {
    if (!(score >= 0.0 && score <= 1.0))
      throw InputError("labeled score outside [0,1]");
  }
};

namespace detail {

// Doubled rank-sum U statistic (2U is always an integer, so the arithmetic
// below is exact). U counts pairs where pos outranks neg, ties as half.
inline uint64_t doubled_u_statistic(const std::vector<double>& pos,
                                    const std::vector<double>& neg) {
  struct Item {
    double s;
    bool is_pos;
  };
  std::vector<Item> items;
  items.reserve(pos.size() + neg.size());
  for (double s : pos) items.push_back({s, true});
  for (double s : neg) items.push_back({s, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.s < b.s; });

  uint64_t doubled_pos_rank_sum = 0;
  size_t i = 0;
  while (i < items.size()) {
    size_t j = i;
    while (j < items.size() && items[j].s == items[i].s) ++j;
    const uint64_t doubled_midrank = static_cast<uint64_t>(i + 1 + j);
    for (size_t k = i; k < j; ++k)
      if (items[k].is_pos) doubled_pos_rank_sum += doubled_midrank;
    i = j;
  }
  const uint64_t m = pos.size();
  return doubled_pos_rank_sum - m * (m + 1);
}

inline void check_exact_range(uint64_t doubled_total) {
  if (doubled_total > (uint64_t{1} << 53))
    throw InternalError("sample too large for exact rank arithmetic");
}

}  // namespace detail

// Midrank AUC. The half-at-or-below branch guarantees that
// roc_auc(a, b) + roc_auc(b, a) == 1 exactly in double arithmetic.
inline double roc_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  if (pos.empty() || neg.empty())
    throw InputError("undefined metric: roc_auc requires non-empty sides");
  const uint64_t u2 = detail::doubled_u_statistic(pos, neg);
  const uint64_t d = 2 * static_cast<uint64_t>(pos.size()) * neg.size();
  detail::check_exact_range(d);
  if (2 * u2 <= d) return static_cast<double>(u2) / static_cast<double>(d);
  return 1.0 - static_cast<double>(d - u2) / static_cast<double>(d);
}

// Average equality gap: U/(mn) - 1/2, positive when the subgroup is scored
// systematically higher than the background. Computed as (2U - mn)/(2mn)
// with an exact integer numerator, so aeg(x, y) == -aeg(y, x) bit for bit.
inline double aeg(const std::vector<double>& subgroup,
                  const std::vector<double>& background) {
  if (subgroup.empty() || background.empty())
    throw InputError("undefined metric: aeg requires non-empty sides");
  const uint64_t u2 = detail::doubled_u_statistic(subgroup, background);
  const uint64_t mn = static_cast<uint64_t>(subgroup.size()) * background.size();
  detail::check_exact_range(2 * mn);
  const double w = static_cast<double>(u2) - static_cast<double>(mn);  // 2U - mn
  return w / static_cast<double>(2 * mn);
}

struct MetricsConfig {
  uint64_t min_cell_size = 10;  // per-cell floor before a metric is computed
  double decision_threshold = 0.5;
};

struct SubgroupReport {
  std::string term;
  std::optional<double> subgroup_auc;
  std::optional<double> bpsn_auc;
  std::optional<double> bnsp_auc;
  std::optional<double> aeg_pos;
  std::optional<double> aeg_neg;
  uint64_t n_subgroup_toxic = 0;
  uint64_t n_subgroup_nontoxic = 0;
  uint64_t n_background_toxic = 0;
  uint64_t n_background_nontoxic = 0;
};

// The five bias metrics over the four cells induced by (in_subgroup, toxic).
// A metric is left unset when either of its cells is below the minimum size.
inline SubgroupReport subgroup_metrics(const std::vector<LabeledScore>& data,
                                       const std::string& term,
                                       const MetricsConfig& cfg = {}) {
  std::vector<double> sp, sn, bp, bn;
  for (const auto& ls : data) {
    ls.validate();
    auto& cell = ls.in_subgroup ? (ls.is_toxic ? sp : sn) : (ls.is_toxic ? bp : bn);
    cell.push_back(ls.score);
  }
  SubgroupReport r;
  r.term = term;
  r.n_subgroup_toxic = sp.size();
  r.n_subgroup_nontoxic = sn.size();
  r.n_background_toxic = bp.size();
  r.n_background_nontoxic = bn.size();
  auto big = [&](const std::vector<double>& v) { return v.size() >= cfg.min_cell_size; };
  if (big(sp) && big(sn)) r.subgroup_auc = roc_auc(sp, sn);
  if (big(bp) && big(sn)) r.bpsn_auc = roc_auc(bp, sn);
  if (big(sp) && big(bn)) r.bnsp_auc = roc_auc(sp, bn);
  if (big(sp) && big(bp)) r.aeg_pos = aeg(sp, bp);
  if (big(sn) && big(bn)) r.aeg_neg = aeg(sn, bn);
  return r;
}

// Subgroup membership on the normalized token stream of the document.
inline bool contains_term(const Document& doc, const std::string& term,
                          const NormalizationConfig& cfg) {
  const auto toks = document_terms(doc, cfg);
  return std::find(toks.begin(), toks.end(), term) != toks.end();
}

inline std::vector<LabeledScore> build_labeled_scores(std::span<const Document> docs,
                                                      std::span<const double> scores,
                                                      const std::string& term,
                                                      const NormalizationConfig& cfg) {
  if (docs.size() != scores.size())
    throw InputError("documents and scores differ in length");
  std::vector<LabeledScore> out;
  out.reserve(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].gold_label)
      throw InputError("document " + docs[i].id + " lacks a gold label");
    LabeledScore ls;
    ls.score = scores[i];
    ls.is_toxic = *docs[i].gold_label;
    ls.in_subgroup = contains_term(docs[i], term, cfg);
    ls.validate();
    out.push_back(ls);
  }
  return out;
}

struct MetricAggregate {
  std::optional<double> mean;
  uint64_t skipped = 0;  // reports where the metric was undefined
};

struct ClusterAggregate {
  int cluster = 0;
  uint64_t n_terms = 0;
  MetricAggregate subgroup_auc, bpsn_auc, bnsp_auc, aeg_pos, aeg_neg;
};

namespace detail {

inline void accumulate(MetricAggregate& agg, const std::optional<double>& v,
                       double& sum, uint64_t& n) {
  if (v) {
    sum += *v;
    ++n;
  } else {
    ++agg.skipped;
  }
}

}  // namespace detail

// Unweighted per-cluster means of the five metrics. Undefined entries are
// skipped and counted.
inline std::vector<ClusterAggregate> cluster_aggregate(
    const std::vector<SubgroupReport>& reports,
    const std::map<std::string, int>& assignments) {
  std::map<int, std::vector<const SubgroupReport*>> by_cluster;
  for (const auto& r : reports) {
    auto it = assignments.find(r.term);
    if (it == assignments.end())
      throw InputError("term '" + r.term + "' has no cluster assignment");
    by_cluster[it->second].push_back(&r);
  }
  std::vector<ClusterAggregate> out;
  for (const auto& [cluster, members] : by_cluster) {
    ClusterAggregate agg;
    agg.cluster = cluster;
    agg.n_terms = members.size();
    double sums[5] = {0, 0, 0, 0, 0};
    uint64_t ns[5] = {0, 0, 0, 0, 0};
    for (const auto* r : members) {
      detail::accumulate(agg.subgroup_auc, r->subgroup_auc, sums[0], ns[0]);
      detail::accumulate(agg.bpsn_auc, r->bpsn_auc, sums[1], ns[1]);
      detail::accumulate(agg.bnsp_auc, r->bnsp_auc, sums[2], ns[2]);
      detail::accumulate(agg.aeg_pos, r->aeg_pos, sums[3], ns[3]);
      detail::accumulate(agg.aeg_neg, r->aeg_neg, sums[4], ns[4]);
    }
    MetricAggregate* fields[5] = {&agg.subgroup_auc, &agg.bpsn_auc, &agg.bnsp_auc,
                                  &agg.aeg_pos, &agg.aeg_neg};
    for (int i = 0; i < 5; ++i)
      if (ns[i] > 0) fields[i]->mean = sums[i] / static_cast<double>(ns[i]);
    out.push_back(agg);
  }
  return out;
}

struct OverallPerformance {
  std::optional<double> auc;
  std::optional<double> f1;
  uint64_t n_toxic = 0;
  uint64_t n_nontoxic = 0;
};

// Scorer-level AUC and F1 at the decision threshold, over gold labels.
inline OverallPerformance overall_performance(const std::vector<LabeledScore>& data,
                                              const MetricsConfig& cfg = {}) {
  std::vector<double> pos, neg;
  uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& ls : data) {
    ls.validate();
    (ls.is_toxic ? pos : neg).push_back(ls.score);
    const bool pred = ls.score >= cfg.decision_threshold;
    if (pred && ls.is_toxic) ++tp;
    else if (pred && !ls.is_toxic) ++fp;
    else if (!pred && ls.is_toxic) ++fn;
  }
  OverallPerformance perf;
  perf.n_toxic = pos.size();
  perf.n_nontoxic = neg.size();
  if (!pos.empty() && !neg.empty()) perf.auc = roc_auc(pos, neg);
  if (2 * tp + fp + fn > 0)
    perf.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return perf;
}

namespace detail {
inline std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}
}  // namespace detail

inline void write_reports_csv(std::ostream& os,
                              const std::vector<SubgroupReport>& reports) {
  os << "term,subgroup_auc,bpsn_auc,bnsp_auc,aeg_pos,aeg_neg,"
        "n_subgroup_toxic,n_subgroup_nontoxic,n_background_toxic,n_background_nontoxic\n";
  for (const auto& r : reports) {
    os << r.term << "," << detail::opt_field(r.subgroup_auc) << ","
       << detail::opt_field(r.bpsn_auc) << "," << detail::opt_field(r.bnsp_auc) << ","
       << detail::opt_field(r.aeg_pos) << "," << detail::opt_field(r.aeg_neg) << ","
       << r.n_subgroup_toxic << "," << r.n_subgroup_nontoxic << ","
       << r.n_background_toxic << "," << r.n_background_nontoxic << "\n";
  }
}

inline void write_cluster_csv(std::ostream& os,
                              const std::vector<ClusterAggregate>& aggs) {
  os << "cluster,n_terms,subgroup_auc,bpsn_auc,bnsp_auc,aeg_pos,aeg_neg,"
        "skipped_subgroup_auc,skipped_bpsn_auc,skipped_bnsp_auc,skipped_aeg_pos,"
        "skipped_aeg_neg\n";
  for (const auto& a : aggs) {
    os << a.cluster << "," << a.n_terms << "," << detail::opt_field(a.subgroup_auc.mean)
       << "," << detail::opt_field(a.bpsn_auc.mean) << ","
       << detail::opt_field(a.bnsp_auc.mean) << "," << detail::opt_field(a.aeg_pos.mean)
       << "," << detail::opt_field(a.aeg_neg.mean) << "," << a.subgroup_auc.skipped
       << "," << a.bpsn_auc.skipped << "," << a.bnsp_auc.skipped << ","
       << a.aeg_pos.skipped << "," << a.aeg_neg.skipped << "\n";
  }
}

inline void write_summary(std::ostream& os, const std::vector<ClusterAggregate>& aggs,
                          const OverallPerformance& perf) {
  os << "cluster  n_terms  subgroup_auc  bpsn_auc  bnsp_auc  aeg_pos  aeg_neg\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("-");
  };
  for (const auto& a : aggs) {
    os << a.cluster << "  " << a.n_terms << "  " << cell(a.subgroup_auc.mean) << "  "
       << cell(a.bpsn_auc.mean) << "  " << cell(a.bnsp_auc.mean) << "  "
       << cell(a.aeg_pos.mean) << "  " << cell(a.aeg_neg.mean) << "\n";
  }
  os << "overall auc=" << cell(perf.auc) << " f1=" << cell(perf.f1)
     << " toxic=" << perf.n_toxic << " nontoxic=" << perf.n_nontoxic << "\n";
}

}  // namespace geolex
