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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "geolex/corpus.hpp"
#include "geolex/manifest.hpp"
#include "geolex/mitigation.hpp"
#include "geolex/perturbation.hpp"
#include "geolex/remote_scorer.hpp"
#include "geolex/saliency.hpp"
#include "geolex/scorer.hpp"
#include "geolex/subgroup_metrics.hpp"
#include "geolex/templates.hpp"

namespace geolex {

inline constexpr const char* kAuthTokenEnvVar = "GEOLEX_API_TOKEN";

struct LabelConfig {
  double threshold = 0.5;
  LabelMode mode = LabelMode::kModelScore;
};

struct ScorerConfig {
  std::string type = "mock";  // mock | remote
  std::string lexicon_path;
  std::string cache_path;
  RemoteScorerConfig remote;
  BatchOptions batch;
};

struct Phase2Config {
  int k = 4;
  uint64_t seed = 0;
  double tol = 1e-6;
  int max_iters = 300;
  bool pos_filter = false;
  bool deviation_mode = false;   // cluster score deltas instead of raw scores
  bool rescore_baselines = true; // baselines from the active scorer, not the fixture
  int k_min = 3;
  int k_max = 6;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + ctx);
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

inline std::string get_string(const nlohmann::json& j, const char* key,
                              const std::string& fallback) {
  std::string v = fallback;
  get_if(j, key, v);
  return v;
}

}  // namespace detail

inline const char* lemmatizer_name(Lemmatizer l) {
  switch (l) {
    case Lemmatizer::kIdentity: return "identity";
    case Lemmatizer::kSimplePluralStrip: return "plural_strip";
    case Lemmatizer::kPrecomputed: return "precomputed";
  }
  throw InternalError("unreachable lemmatizer");
}

inline Lemmatizer parse_lemmatizer(const std::string& s) {
  if (s == "identity") return Lemmatizer::kIdentity;
  if (s == "plural_strip") return Lemmatizer::kSimplePluralStrip;
  if (s == "precomputed") return Lemmatizer::kPrecomputed;
  throw ConfigError("unknown lemmatizer: " + s);
}

struct RunConfig {
  std::string input_path;      // documents (jsonl)
  std::string dataset_path;    // labeled examples / gold-labeled documents
  std::string terms_path;      // term list or candidate table
  std::string templates_path;  // empty: bundled fixture
  std::string output_dir = "out";
  int shards = 1;
  uint64_t balance_seed = 0;
  NormalizationConfig norm;
  LabelConfig label;
  SaliencyConfig saliency;
  ScorerConfig scorer;
  Phase2Config phase2;
  MetricsConfig metrics;
  MitigationSpec mitigation = {MitigationStrategy::kDeletion, {}, "<UNK>", 100, 0,
                               QuotaFormula::kAsPrinted};

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"input", "dataset", "terms", "templates", "output_dir", "shards",
                      "balance_seed", "normalization", "label", "saliency", "scorer",
                      "phase2", "metrics", "mitigation"},
                     "run config");
  RunConfig c;
  detail::get_if(j, "input", c.input_path);
  detail::get_if(j, "dataset", c.dataset_path);
  detail::get_if(j, "terms", c.terms_path);
  detail::get_if(j, "templates", c.templates_path);
  detail::get_if(j, "output_dir", c.output_dir);
  detail::get_if(j, "shards", c.shards);
  detail::get_if(j, "balance_seed", c.balance_seed);
  if (c.shards < 1) throw ConfigError("shards must be >= 1");

  if (j.contains("normalization")) {
    const auto& n = j["normalization"];
    detail::check_keys(n,
                       {"strip_urls", "strip_hashtags", "strip_special_and_numeric",
                        "lowercase", "lemmatizer"},
                       "normalization");
    detail::get_if(n, "strip_urls", c.norm.strip_urls);
    detail::get_if(n, "strip_hashtags", c.norm.strip_hashtags);
    detail::get_if(n, "strip_special_and_numeric", c.norm.strip_special_and_numeric);
    detail::get_if(n, "lowercase", c.norm.lowercase);
    if (n.contains("lemmatizer"))
      c.norm.lemmatizer = parse_lemmatizer(n["lemmatizer"].get<std::string>());
  }
  if (j.contains("label")) {
    const auto& l = j["label"];
    detail::check_keys(l, {"threshold", "mode"}, "label");
    detail::get_if(l, "threshold", c.label.threshold);
    const std::string mode = detail::get_string(l, "mode", "model");
    if (mode == "model") c.label.mode = LabelMode::kModelScore;
    else if (mode == "gold") c.label.mode = LabelMode::kGold;
    else throw ConfigError("unknown label mode: " + mode);
    if (!(c.label.threshold >= 0.0 && c.label.threshold <= 1.0))
      throw ConfigError("label threshold outside [0,1]");
  }
  if (j.contains("saliency")) {
    const auto& s = j["saliency"];
    detail::check_keys(s,
                       {"prior_strength", "z_threshold", "p_threshold", "min_count",
                        "lower_tail_reading", "toxicity_test", "geo_test"},
                       "saliency");
    detail::get_if(s, "prior_strength", c.saliency.prior_strength);
    detail::get_if(s, "z_threshold", c.saliency.z_threshold);
    detail::get_if(s, "p_threshold", c.saliency.p_threshold);
    detail::get_if(s, "min_count", c.saliency.min_count);
    detail::get_if(s, "lower_tail_reading", c.saliency.lower_tail_reading);
    const std::string tox = detail::get_string(s, "toxicity_test", "log_odds");
    if (tox == "log_odds") c.saliency.toxicity_test = ToxicityTest::kDirichletLogOdds;
    else if (tox == "beta_posterior") c.saliency.toxicity_test = ToxicityTest::kBetaPosterior;
    else throw ConfigError("unknown toxicity_test: " + tox);
    const std::string geo = detail::get_string(s, "geo_test", "beta_posterior");
    if (geo == "beta_posterior") c.saliency.geo_test = GeoTest::kBetaPosterior;
    else if (geo == "one_vs_rest") c.saliency.geo_test = GeoTest::kOneVsRestLogOdds;
    else throw ConfigError("unknown geo_test: " + geo);
    c.saliency.validate();
  }
  if (j.contains("scorer")) {
    const auto& s = j["scorer"];
    if (s.is_object() && (s.contains("auth_token") || s.contains("token")))
      throw ConfigError("auth tokens are read from the " +
                        std::string(kAuthTokenEnvVar) +
                        " environment variable, never from config files");
    detail::check_keys(s,
                       {"type", "lexicon", "cache", "base_url", "path", "max_retries",
                        "backoff_initial_ms", "backoff_multiplier", "timeout_sec",
                        "max_in_flight", "rate_per_sec"},
                       "scorer");
    detail::get_if(s, "type", c.scorer.type);
    if (c.scorer.type != "mock" && c.scorer.type != "remote")
      throw ConfigError("scorer type must be mock or remote, got: " + c.scorer.type);
    detail::get_if(s, "lexicon", c.scorer.lexicon_path);
    detail::get_if(s, "cache", c.scorer.cache_path);
    detail::get_if(s, "base_url", c.scorer.remote.base_url);
    detail::get_if(s, "path", c.scorer.remote.path);
    detail::get_if(s, "max_retries", c.scorer.remote.max_retries);
    detail::get_if(s, "backoff_initial_ms", c.scorer.remote.backoff_initial_ms);
    detail::get_if(s, "backoff_multiplier", c.scorer.remote.backoff_multiplier);
    detail::get_if(s, "timeout_sec", c.scorer.remote.timeout_sec);
    detail::get_if(s, "max_in_flight", c.scorer.batch.max_in_flight);
    detail::get_if(s, "rate_per_sec", c.scorer.batch.rate_per_sec);
  }
  if (j.contains("phase2")) {
    const auto& p = j["phase2"];
    detail::check_keys(p,
                       {"k", "seed", "tol", "max_iters", "pos_filter", "deviation_mode",
                        "rescore_baselines", "k_min", "k_max"},
                       "phase2");
    detail::get_if(p, "k", c.phase2.k);
    detail::get_if(p, "seed", c.phase2.seed);
    detail::get_if(p, "tol", c.phase2.tol);
    detail::get_if(p, "max_iters", c.phase2.max_iters);
    detail::get_if(p, "pos_filter", c.phase2.pos_filter);
    detail::get_if(p, "deviation_mode", c.phase2.deviation_mode);
    detail::get_if(p, "rescore_baselines", c.phase2.rescore_baselines);
    detail::get_if(p, "k_min", c.phase2.k_min);
    detail::get_if(p, "k_max", c.phase2.k_max);
    if (c.phase2.k < 1) throw ConfigError("phase2 k must be >= 1");
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    detail::check_keys(m, {"min_cell_size", "decision_threshold"}, "metrics");
    detail::get_if(m, "min_cell_size", c.metrics.min_cell_size);
    detail::get_if(m, "decision_threshold", c.metrics.decision_threshold);
  }
  if (j.contains("mitigation")) {
    const auto& m = j["mitigation"];
    detail::check_keys(m, {"strategy", "target_terms", "unk_token", "k", "seed",
                           "quota_formula"},
                       "mitigation");
    c.mitigation.strategy =
        parse_strategy(detail::get_string(m, "strategy", "deletion"));
    detail::get_if(m, "target_terms", c.mitigation.target_terms);
    detail::get_if(m, "unk_token", c.mitigation.unk_token);
    detail::get_if(m, "k", c.mitigation.k);
    detail::get_if(m, "seed", c.mitigation.seed);
    const std::string q = detail::get_string(m, "quota_formula", "as_printed");
    if (q == "as_printed") c.mitigation.quota_formula = QuotaFormula::kAsPrinted;
    else if (q == "min") c.mitigation.quota_formula = QuotaFormula::kMinVariant;
    else throw ConfigError("unknown quota_formula: " + q);
  }
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  return from_json(j);
}

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["input"] = input_path;
  j["dataset"] = dataset_path;
  j["terms"] = terms_path;
  j["templates"] = templates_path;
  j["output_dir"] = output_dir;
  j["shards"] = shards;
  j["balance_seed"] = balance_seed;
  j["normalization"] = {{"strip_urls", norm.strip_urls},
                        {"strip_hashtags", norm.strip_hashtags},
                        {"strip_special_and_numeric", norm.strip_special_and_numeric},
                        {"lowercase", norm.lowercase},
                        {"lemmatizer", lemmatizer_name(norm.lemmatizer)}};
  j["label"] = {{"threshold", label.threshold},
                {"mode", label.mode == LabelMode::kGold ? "gold" : "model"}};
  j["saliency"] = {
      {"prior_strength", saliency.prior_strength},
      {"z_threshold", saliency.z_threshold},
      {"p_threshold", saliency.p_threshold},
      {"min_count", saliency.min_count},
      {"lower_tail_reading", saliency.lower_tail_reading},
      {"toxicity_test",
       saliency.toxicity_test == ToxicityTest::kBetaPosterior ? "beta_posterior"
                                                              : "log_odds"},
      {"geo_test",
       saliency.geo_test == GeoTest::kOneVsRestLogOdds ? "one_vs_rest"
                                                       : "beta_posterior"}};
  j["scorer"] = {{"type", scorer.type},
                 {"lexicon", scorer.lexicon_path},
                 {"cache", scorer.cache_path},
                 {"base_url", scorer.remote.base_url},
                 {"path", scorer.remote.path},
                 {"max_retries", scorer.remote.max_retries},
                 {"backoff_initial_ms", scorer.remote.backoff_initial_ms},
                 {"backoff_multiplier", scorer.remote.backoff_multiplier},
                 {"timeout_sec", scorer.remote.timeout_sec},
                 {"max_in_flight", scorer.batch.max_in_flight},
                 {"rate_per_sec", scorer.batch.rate_per_sec}};
  j["phase2"] = {{"k", phase2.k},
                 {"seed", phase2.seed},
                 {"tol", phase2.tol},
                 {"max_iters", phase2.max_iters},
                 {"pos_filter", phase2.pos_filter},
                 {"deviation_mode", phase2.deviation_mode},
                 {"rescore_baselines", phase2.rescore_baselines},
                 {"k_min", phase2.k_min},
                 {"k_max", phase2.k_max}};
  j["metrics"] = {{"min_cell_size", metrics.min_cell_size},
                  {"decision_threshold", metrics.decision_threshold}};
  j["mitigation"] = {{"strategy", strategy_name(mitigation.strategy)},
                     {"target_terms", mitigation.target_terms},
                     {"unk_token", mitigation.unk_token},
                     {"k", mitigation.k},
                     {"seed", mitigation.seed},
                     {"quota_formula",
                      mitigation.quota_formula == QuotaFormula::kMinVariant
                          ? "min"
                          : "as_printed"}};
  return j;
}

// Active scorer plus its cache, materialized from config.
struct ScorerBundle {
  std::unique_ptr<Scorer> inner;
  std::unique_ptr<ScoreCache> cache;
  std::unique_ptr<CachingScorer> caching;
  std::string cache_path;
  bool cache_preexisting = false;

  Scorer& active() { return caching ? static_cast<Scorer&>(*caching) : *inner; }

  void save_cache() const {
    if (cache && !cache_path.empty()) cache->save(cache_path);
  }
};

inline ScorerBundle make_scorer(const RunConfig& cfg) {
  ScorerBundle b;
  if (cfg.scorer.type == "mock") {
    if (cfg.scorer.lexicon_path.empty())
      throw ConfigError("mock scorer requires scorer.lexicon");
    b.inner = std::make_unique<MockScorer>(MockLexicon::load(cfg.scorer.lexicon_path),
                                           cfg.norm);
  } else if (cfg.scorer.type == "remote") {
    RemoteScorerConfig rc = cfg.scorer.remote;
    if (const char* tok = std::getenv(kAuthTokenEnvVar)) rc.auth_token = tok;
    b.inner = std::make_unique<RemoteScorer>(rc);
  } else {
    throw ConfigError("scorer type must be mock or remote");
  }
  if (!cfg.scorer.cache_path.empty()) {
    b.cache_path = cfg.scorer.cache_path;
    b.cache = std::make_unique<ScoreCache>();
    if (std::filesystem::exists(b.cache_path)) {
      b.cache->load(b.cache_path);
      b.cache_preexisting = true;
    }
    b.caching = std::make_unique<CachingScorer>(*b.inner, *b.cache);
  }
  return b;
}

// Collects a stage's inputs and outputs, then writes the manifest and the
// timing sidecar.
class StageWriter {
 public:
  StageWriter(const RunConfig& cfg, std::string stage)
      : dir_(cfg.output_dir), start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(dir_);
    manifest_.stage = std::move(stage);
    manifest_.config = cfg.to_json();
    manifest_.config.erase("output_dir");  // identical runs in different dirs match
  }

  std::string out_path(const std::string& basename) const {
    return (std::filesystem::path(dir_) / basename).string();
  }

  void note_input(const std::string& path) {
    verify_against_manifests(path);
    // Artifacts inside the run directory are keyed relative to it so that
    // identical runs in different directories produce identical manifests.
    std::string key = path;
    const std::string prefix = dir_ + "/";
    if (key.rfind(prefix, 0) == 0) key = key.substr(prefix.size());
    manifest_.inputs[key] = sha256_file(path);
  }

  void note_output(const std::string& basename) {
    manifest_.outputs[basename] = sha256_file(out_path(basename));
  }

  void note_output_path(const std::string& path) {
    manifest_.outputs[std::filesystem::path(path).filename().string()] =
        sha256_file(path);
  }

  void finish() {
    write_manifest(dir_, manifest_);
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
    write_timing_sidecar(dir_, manifest_.stage, wall);
  }

 private:
  std::string dir_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

namespace detail {

inline std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? std::string("_") : out;
}

// Accepts either a candidate table (headered tsv) or a bare one-term-per-line
// list; returns terms deduplicated in first-seen order.
inline std::vector<std::string> read_terms_any(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open terms file: " + path);
  std::vector<std::string> terms;
  std::unordered_set<std::string> seen;
  std::string line;
  bool first = true;
  bool candidate_table = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("term\tcountry", 0) == 0) {
        candidate_table = true;
        continue;
      }
    }
    std::string term;
    if (candidate_table) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw InputError("malformed candidate row in " + path + ": " + line);
      term = line.substr(0, tab);
    } else {
      term = line;
      while (!term.empty() && (term.back() == '\r' || term.back() == ' ')) term.pop_back();
      if (term.empty()) continue;
    }
    if (seen.insert(term).second) terms.push_back(std::move(term));
  }
  if (terms.empty()) throw InputError("no terms found in " + path);
  return terms;
}

inline std::vector<double> score_documents(ScorerBundle& bundle,
                                           const std::vector<Document>& docs,
                                           const BatchOptions& opts) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  auto outcomes = score_batch(bundle.active(), texts, opts);
  std::vector<double> scores;
  scores.reserve(outcomes.size());
  size_t failures = 0;
  std::string first_error;
  for (const auto& o : outcomes) {
    if (!o.ok()) {
      if (failures == 0) first_error = o.error;
      ++failures;
      scores.push_back(0.0);
    } else {
      scores.push_back(*o.score);
    }
  }
  if (failures > 0)
    throw RemoteScorerError(std::to_string(failures) + " of " +
                            std::to_string(outcomes.size()) +
                            " scoring calls failed; first error: " + first_error);
  return scores;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write file: " + path);
  os << content;
}

}  // namespace detail

// Phase 1: count, partition, and select per-country candidate terms.
inline CandidateMap cmd_phase1(const RunConfig& cfg) {
  if (cfg.input_path.empty()) throw ConfigError("phase1 requires an input path");
  StageWriter sw(cfg, "phase1");
  sw.note_input(cfg.input_path);
  const std::vector<Document> docs = read_documents(cfg.input_path);
  if (docs.empty()) throw InputError("no documents");
  const CountryPartition part =
      build_partition(docs, cfg.norm, cfg.label.threshold, cfg.label.mode);
  const BalancedCorpus balanced = build_balanced_toxic_corpus(part, cfg.balance_seed);
  std::vector<std::string> diags;
  const CandidateMap cands = phase1_select(part, balanced, cfg.saliency, &diags);

  std::vector<CandidateTerm> combined;
  for (const auto& [country, rows] : cands) {
    std::ofstream os(sw.out_path("candidates_" + detail::sanitize_filename(country) +
                                 ".tsv"));
    write_candidates(os, rows);
    os.close();
    sw.note_output("candidates_" + detail::sanitize_filename(country) + ".tsv");
    combined.insert(combined.end(), rows.begin(), rows.end());
  }
  {
    std::ofstream os(sw.out_path("candidates.tsv"));
    write_candidates(os, combined);
  }
  sw.note_output("candidates.tsv");
  detail::write_text_file(sw.out_path("diagnostics_phase1.txt"),
                          diags.empty() ? "" : join(diags, "\n") + "\n");
  sw.note_output("diagnostics_phase1.txt");
  sw.finish();
  return cands;
}

namespace detail {

struct Phase2Data {
  std::vector<std::string> terms;
  TemplateSet templates;              // baselines possibly re-scored
  std::vector<PerturbationVector> vectors;  // raw scores
  std::vector<PerturbationVector> cluster_vectors;  // raw or deviations
  std::vector<std::string> diagnostics;
};

inline Phase2Data prepare_phase2(const RunConfig& cfg, StageWriter& sw,
                                 ScorerBundle& bundle) {
  Phase2Data data;
  const std::string terms_file = cfg.terms_path.empty()
                                     ? sw.out_path("candidates.tsv")
                                     : cfg.terms_path;
  sw.note_input(terms_file);
  data.terms = read_terms_any(terms_file);

  if (cfg.phase2.pos_filter) {
    if (cfg.input_path.empty())
      throw ConfigError("pos_filter requires the documents input for tag lookup");
    sw.note_input(cfg.input_path);
    const auto docs = read_documents(cfg.input_path);
    data.terms = filter_pos(data.terms, docs, cfg.norm, true);
    if (data.terms.empty()) throw InputError("no terms left after pos filtering");
  }

  if (cfg.templates_path.empty()) {
    data.templates = TemplateSet::builtin();
  } else {
    sw.note_input(cfg.templates_path);
    data.templates = read_templates_file(cfg.templates_path);
  }
  if (cfg.scorer.type == "mock") sw.note_input(cfg.scorer.lexicon_path);
  if (bundle.cache_preexisting) sw.note_input(bundle.cache_path);

  if (cfg.phase2.rescore_baselines) {
    std::vector<std::string> base_texts;
    for (const auto& t : data.templates.templates)
      base_texts.push_back(instantiate(t, "person"));
    auto outcomes = score_batch(bundle.active(), base_texts, cfg.scorer.batch);
    for (size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].ok())
        throw RemoteScorerError("baseline scoring failed for template " +
                                std::to_string(i) + ": " + outcomes[i].error);
      data.templates.templates[i].baseline_score = *outcomes[i].score;
    }
  }

  data.vectors = build_vectors(data.terms, data.templates, bundle.active(),
                               cfg.scorer.batch, &data.diagnostics);
  if (data.vectors.empty()) throw InputError("no perturbation vectors could be built");

  data.cluster_vectors = data.vectors;
  if (cfg.phase2.deviation_mode) {
    for (auto& v : data.cluster_vectors)
      for (size_t i = 0; i < v.scores.size(); ++i)
        v.scores[i] -= data.templates.templates[i].baseline_score;
  }
  return data;
}

inline void write_vectors_tsv(const std::string& path,
                              const std::vector<PerturbationVector>& vectors) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write vectors file: " + path);
  for (const auto& v : vectors) {
    os << v.term;
    for (double s : v.scores) os << "\t" << format_double(s);
    os << "\n";
  }
}

inline nlohmann::json model_to_json(const ClusterModel& model) {
  nlohmann::json j;
  j["k"] = model.k;
  j["seed"] = model.seed;
  j["inertia"] = model.inertia;
  j["centroids"] = model.centroids;
  j["assignments"] = model.assignments;
  return j;
}

inline ClusterModel model_from_json(const nlohmann::json& j) {
  ClusterModel m;
  try {
    m.k = j.at("k").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.inertia = j.at("inertia").get<double>();
    m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    for (const auto& [term, c] : j.at("assignments").items())
      m.assignments[term] = c.get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad cluster model: ") + e.what());
  }
  return m;
}

inline ClusterModel read_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open cluster model: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cannot parse cluster model " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace detail

// Phase 2: perturbation vectors, clustering, and profile emission.
inline ClusterModel cmd_phase2(const RunConfig& cfg) {
  StageWriter sw(cfg, "phase2");
  ScorerBundle bundle = make_scorer(cfg);
  detail::Phase2Data data = detail::prepare_phase2(cfg, sw, bundle);

  const ClusterModel model =
      kmeans_fit(data.cluster_vectors, cfg.phase2.k, cfg.phase2.seed,
                 cfg.phase2.max_iters, cfg.phase2.tol);
  const auto series = cluster_profile(model, data.templates, data.cluster_vectors);

  detail::write_vectors_tsv(sw.out_path("vectors.tsv"), data.vectors);
  sw.note_output("vectors.tsv");
  detail::write_text_file(sw.out_path("model.json"),
                          detail::model_to_json(model).dump(2) + "\n");
  sw.note_output("model.json");
  {
    std::ofstream os(sw.out_path("assignments.csv"));
    write_assignments(os, series);
  }
  sw.note_output("assignments.csv");
  {
    std::ofstream os(sw.out_path("profile.csv"));
    write_profile(os, series);
  }
  sw.note_output("profile.csv");
  detail::write_text_file(sw.out_path("diagnostics_phase2.txt"),
                          data.diagnostics.empty() ? "" : join(data.diagnostics, "\n") + "\n");
  sw.note_output("diagnostics_phase2.txt");
  bundle.save_cache();
  if (!bundle.cache_path.empty()) sw.note_output_path(bundle.cache_path);
  sw.finish();
  return model;
}

// Inertia across the k range, for choosing k.
inline std::vector<KScanRow> cmd_scan_k(const RunConfig& cfg) {
  StageWriter sw(cfg, "scan_k");
  ScorerBundle bundle = make_scorer(cfg);
  detail::Phase2Data data = detail::prepare_phase2(cfg, sw, bundle);
  const auto rows = scan_k(data.cluster_vectors, cfg.phase2.k_min, cfg.phase2.k_max,
                           cfg.phase2.seed, cfg.phase2.max_iters, cfg.phase2.tol);
  std::string csv = "k,inertia\n";
  for (const auto& r : rows)
    csv += std::to_string(r.k) + "," + format_double(r.inertia) + "\n";
  detail::write_text_file(sw.out_path("scan_k.csv"), csv);
  sw.note_output("scan_k.csv");
  bundle.save_cache();
  if (!bundle.cache_path.empty()) sw.note_output_path(bundle.cache_path);
  sw.finish();
  return rows;
}

struct MetricsResult {
  std::vector<SubgroupReport> reports;
  std::vector<ClusterAggregate> aggregates;
  OverallPerformance performance;
};

// Per-term and per-cluster bias metrics over a gold-labeled dataset.
inline MetricsResult cmd_metrics(const RunConfig& cfg) {
  if (cfg.dataset_path.empty())
    throw ConfigError("metrics requires a gold-labeled dataset path");
  StageWriter sw(cfg, "metrics");
  sw.note_input(cfg.dataset_path);
  const std::vector<Document> docs = read_documents(cfg.dataset_path);
  if (docs.empty()) throw InputError("no documents");
  for (const auto& d : docs)
    if (!d.gold_label)
      throw InputError("document " + d.id + " lacks a gold label required for metrics");

  const std::string model_path = sw.out_path("model.json");
  sw.note_input(model_path);
  const ClusterModel model = detail::read_model_file(model_path);

  ScorerBundle bundle = make_scorer(cfg);
  if (cfg.scorer.type == "mock") sw.note_input(cfg.scorer.lexicon_path);
  if (bundle.cache_preexisting) sw.note_input(bundle.cache_path);
  const std::vector<double> scores =
      detail::score_documents(bundle, docs, cfg.scorer.batch);

  std::vector<std::unordered_set<std::string>> doc_terms;
  doc_terms.reserve(docs.size());
  for (const auto& d : docs) {
    auto terms = document_terms(d, cfg.norm);
    doc_terms.emplace_back(terms.begin(), terms.end());
  }

  MetricsResult res;
  std::vector<LabeledScore> base(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    base[i].score = scores[i];
    base[i].is_toxic = *docs[i].gold_label;
  }
  res.performance = overall_performance(base, cfg.metrics);
  for (const auto& [term, _] : model.assignments) {
    std::vector<LabeledScore> data = base;
    for (size_t i = 0; i < docs.size(); ++i)
      data[i].in_subgroup = doc_terms[i].count(term) > 0;
    res.reports.push_back(subgroup_metrics(data, term, cfg.metrics));
  }
  res.aggregates = cluster_aggregate(res.reports, model.assignments);

  {
    std::ofstream os(sw.out_path("reports.csv"));
    write_reports_csv(os, res.reports);
  }
  sw.note_output("reports.csv");
  {
    std::ofstream os(sw.out_path("clusters.csv"));
    write_cluster_csv(os, res.aggregates);
  }
  sw.note_output("clusters.csv");
  {
    std::ofstream os(sw.out_path("summary.txt"));
    write_summary(os, res.aggregates, res.performance);
  }
  sw.note_output("summary.txt");
  bundle.save_cache();
  if (!bundle.cache_path.empty()) sw.note_output_path(bundle.cache_path);
  sw.finish();
  return res;
}

// Emits the transformed training dataset for the configured strategy.
inline BalancedSelection cmd_mitigate(const RunConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("mitigate requires a dataset path");
  StageWriter sw(cfg, "mitigate");
  sw.note_input(cfg.dataset_path);
  const std::vector<LabeledExample> dataset = read_examples(cfg.dataset_path);
  if (dataset.empty()) throw InputError("no documents");

  MitigationSpec spec = cfg.mitigation;
  if (spec.target_terms.empty()) {
    const std::string terms_file = cfg.terms_path.empty()
                                       ? sw.out_path("candidates.tsv")
                                       : cfg.terms_path;
    sw.note_input(terms_file);
    spec.target_terms = detail::read_terms_any(terms_file);
  }
  std::vector<std::string> diags;
  if (spec.strategy == MitigationStrategy::kBalanceTune) {
    const auto elig = eligible_terms(dataset, spec.target_terms, cfg.norm);
    if (elig.size() < spec.target_terms.size())
      diags.push_back(std::to_string(spec.target_terms.size() - elig.size()) +
                      " target terms dropped by the eligibility rule");
    if (elig.empty()) throw InputError("no eligible terms for balance_tune");
    spec.target_terms = elig;
  }
  BalancedSelection result = apply_mitigation(spec, dataset, cfg.norm);
  result.diagnostics.insert(result.diagnostics.begin(), diags.begin(), diags.end());

  write_examples(sw.out_path("mitigated.jsonl"), result.examples);
  sw.note_output("mitigated.jsonl");
  nlohmann::json stats;
  stats["strategy"] = strategy_name(spec.strategy);
  stats["target_terms"] = spec.target_terms;
  stats["k"] = spec.k;
  stats["seed"] = spec.seed;
  stats["n_input"] = dataset.size();
  stats["n_output"] = result.examples.size();
  stats["diagnostics"] = result.diagnostics;
  stats["per_term"] = nlohmann::json::array();
  for (const auto& st : result.per_term)
    stats["per_term"].push_back({{"term", st.term},
                                 {"m", st.m},
                                 {"n", st.n},
                                 {"quota", st.quota},
                                 {"taken_toxic", st.taken_toxic},
                                 {"taken_nontoxic", st.taken_nontoxic}});
  detail::write_text_file(sw.out_path("stats_mitigation.json"), stats.dump(2) + "\n");
  sw.note_output("stats_mitigation.json");
  sw.finish();
  return result;
}

// Consolidated human-readable report from prior stage outputs.
inline void cmd_report(const RunConfig& cfg) {
  StageWriter sw(cfg, "report");
  std::string out = "audit report\n============\n";

  const std::string cand_path = sw.out_path("candidates.tsv");
  if (std::filesystem::exists(cand_path)) {
    sw.note_input(cand_path);
    std::ifstream is(cand_path);
    const auto rows = read_candidates(is);
    std::map<std::string, std::vector<const CandidateTerm*>> by_country;
    for (const auto& r : rows) by_country[r.country].push_back(&r);
    out += "\nphase 1 candidates\n";
    for (const auto& [country, list] : by_country) {
      out += country + ": " + std::to_string(list.size()) + " terms; top:";
      for (size_t i = 0; i < list.size() && i < 5; ++i)
        out += " " + list[i]->term + " (z=" + format_double(list[i]->z) + ")";
      out += "\n";
    }
  }
  const std::string model_path = sw.out_path("model.json");
  if (std::filesystem::exists(model_path)) {
    sw.note_input(model_path);
    const ClusterModel model = detail::read_model_file(model_path);
    std::map<int, uint64_t> sizes;
    for (const auto& [_, c] : model.assignments) ++sizes[c];
    out += "\nphase 2 clusters (k=" + std::to_string(model.k) +
           ", inertia=" + format_double(model.inertia) + ")\n";
    for (const auto& [c, n] : sizes)
      out += "cluster " + std::to_string(c) + ": " + std::to_string(n) + " terms\n";
  }
  const std::string summary_path = sw.out_path("summary.txt");
  if (std::filesystem::exists(summary_path)) {
    sw.note_input(summary_path);
    std::ifstream is(summary_path);
    std::string line;
    out += "\nbias metrics\n";
    while (std::getline(is, line)) out += line + "\n";
  }
  detail::write_text_file(sw.out_path("report.txt"), out);
  sw.note_output("report.txt");
  sw.finish();
}

}  // namespace geolex
