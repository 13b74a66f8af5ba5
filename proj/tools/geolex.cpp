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

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geolex/pipeline.hpp"
#include "geolex/version.hpp"

namespace {

using geolex::RunConfig;

struct CliOverrides {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string input, dataset, terms, templates, output_dir;
  int shards = 1;
  uint64_t balance_seed = 0;
  std::string lemmatizer, label_mode;
  double label_threshold = 0.5;
  double prior_strength = 100.0, z_threshold = 1.96, p_threshold = 0.05;
  uint64_t min_count = 5;
  bool lower_tail = false;
  std::string toxicity_test, geo_test;
  std::string scorer_type, lexicon, cache, base_url, remote_path;
  int max_retries = 3, timeout_sec = 10, max_in_flight = 4;
  double rate_per_sec = 0.0;
  int k = 4, max_iters = 300, k_min = 3, k_max = 6;
  uint64_t seed = 0;
  double tol = 1e-6;
  bool pos_filter = false, deviation_mode = false, no_rescore = false;
  uint64_t min_cell_size = 10;
  double decision_threshold = 0.5;
  std::string strategy, unk_token, quota_formula;
  uint64_t quota_k = 100, mitigation_seed = 0;
  std::vector<std::string> target_terms;

  bool passed(const std::string& flag) const {
    return app->get_option(flag)->count() > 0;
  }

  void register_options(CLI::App& a) {
    app = &a;
    a.add_option("--config", config_path, "JSON run configuration file");
    a.add_option("--input", input, "documents file (jsonl)");
    a.add_option("--dataset", dataset, "gold-labeled dataset (jsonl)");
    a.add_option("--terms", terms, "term list or candidate table");
    a.add_option("--templates", templates, "template fixture (tsv)");
    a.add_option("--output-dir", output_dir, "stage output directory");
    a.add_option("--shards", shards, "parallel counting shards");
    a.add_option("--balance-seed", balance_seed, "seed for the balanced toxic corpus");
    a.add_option("--lemmatizer", lemmatizer, "identity|plural_strip|precomputed");
    a.add_option("--label-mode", label_mode, "model|gold");
    a.add_option("--label-threshold", label_threshold, "toxicity decision threshold");
    a.add_option("--prior-strength", prior_strength, "Dirichlet prior mass");
    a.add_option("--z-threshold", z_threshold, "log-odds z significance threshold");
    a.add_option("--p-threshold", p_threshold, "posterior tail threshold");
    a.add_option("--min-count", min_count, "minimum toxic-corpus term count");
    a.add_flag("--lower-tail", lower_tail, "literal lower-tail significance reading");
    a.add_option("--toxicity-test", toxicity_test, "log_odds|beta_posterior");
    a.add_option("--geo-test", geo_test, "beta_posterior|one_vs_rest");
    a.add_option("--scorer", scorer_type, "mock|remote");
    a.add_option("--lexicon", lexicon, "mock scorer lexicon (json)");
    a.add_option("--cache", cache, "score cache file");
    a.add_option("--base-url", base_url, "remote scorer base url");
    a.add_option("--scorer-path", remote_path, "remote scorer endpoint path");
    a.add_option("--max-retries", max_retries, "remote retry budget");
    a.add_option("--timeout-sec", timeout_sec, "remote timeout");
    a.add_option("--max-in-flight", max_in_flight, "concurrent scoring calls");
    a.add_option("--rate-per-sec", rate_per_sec, "scoring rate limit (0 = off)");
    a.add_option("--k", k, "cluster count");
    a.add_option("--seed", seed, "clustering seed");
    a.add_option("--tol", tol, "k-means convergence tolerance");
    a.add_option("--max-iters", max_iters, "k-means iteration cap");
    a.add_option("--k-min", k_min, "scan-k lower bound");
    a.add_option("--k-max", k_max, "scan-k upper bound");
    a.add_flag("--pos-filter", pos_filter, "keep only noun-majority terms");
    a.add_flag("--deviation-mode", deviation_mode, "cluster score deltas from baselines");
    a.add_flag("--no-rescore-baselines", no_rescore, "use fixture baselines as-is");
    a.add_option("--min-cell-size", min_cell_size, "minimum metric cell size");
    a.add_option("--decision-threshold", decision_threshold, "F1 decision threshold");
    a.add_option("--strategy", strategy, "deletion|substitution|balance_tune");
    a.add_option("--unk-token", unk_token, "substitution replacement token");
    a.add_option("--quota-k", quota_k, "balance_tune k");
    a.add_option("--mitigation-seed", mitigation_seed, "balance_tune sampling seed");
    a.add_option("--quota-formula", quota_formula, "as_printed|min");
    a.add_option("--target-terms", target_terms, "explicit mitigation terms");
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::load(config_path);
    if (passed("--input")) cfg.input_path = input;
    if (passed("--dataset")) cfg.dataset_path = dataset;
    if (passed("--terms")) cfg.terms_path = terms;
    if (passed("--templates")) cfg.templates_path = templates;
    if (passed("--output-dir")) cfg.output_dir = output_dir;
    if (passed("--shards")) cfg.shards = shards;
    if (passed("--balance-seed")) cfg.balance_seed = balance_seed;
    if (passed("--lemmatizer")) cfg.norm.lemmatizer = geolex::parse_lemmatizer(lemmatizer);
    if (passed("--label-mode")) {
      if (label_mode == "model") cfg.label.mode = geolex::LabelMode::kModelScore;
      else if (label_mode == "gold") cfg.label.mode = geolex::LabelMode::kGold;
      else throw geolex::ConfigError("unknown label mode: " + label_mode);
    }
    if (passed("--label-threshold")) cfg.label.threshold = label_threshold;
    if (passed("--prior-strength")) cfg.saliency.prior_strength = prior_strength;
    if (passed("--z-threshold")) cfg.saliency.z_threshold = z_threshold;
    if (passed("--p-threshold")) cfg.saliency.p_threshold = p_threshold;
    if (passed("--min-count")) cfg.saliency.min_count = min_count;
    if (passed("--lower-tail")) cfg.saliency.lower_tail_reading = lower_tail;
    if (passed("--toxicity-test")) {
      if (toxicity_test == "log_odds")
        cfg.saliency.toxicity_test = geolex::ToxicityTest::kDirichletLogOdds;
      else if (toxicity_test == "beta_posterior")
        cfg.saliency.toxicity_test = geolex::ToxicityTest::kBetaPosterior;
      else throw geolex::ConfigError("unknown toxicity_test: " + toxicity_test);
    }
    if (passed("--geo-test")) {
      if (geo_test == "beta_posterior")
        cfg.saliency.geo_test = geolex::GeoTest::kBetaPosterior;
      else if (geo_test == "one_vs_rest")
        cfg.saliency.geo_test = geolex::GeoTest::kOneVsRestLogOdds;
      else throw geolex::ConfigError("unknown geo_test: " + geo_test);
    }
    if (passed("--scorer")) cfg.scorer.type = scorer_type;
    if (passed("--lexicon")) cfg.scorer.lexicon_path = lexicon;
    if (passed("--cache")) cfg.scorer.cache_path = cache;
    if (passed("--base-url")) cfg.scorer.remote.base_url = base_url;
    if (passed("--scorer-path")) cfg.scorer.remote.path = remote_path;
    if (passed("--max-retries")) cfg.scorer.remote.max_retries = max_retries;
    if (passed("--timeout-sec")) cfg.scorer.remote.timeout_sec = timeout_sec;
    if (passed("--max-in-flight")) cfg.scorer.batch.max_in_flight = max_in_flight;
    if (passed("--rate-per-sec")) cfg.scorer.batch.rate_per_sec = rate_per_sec;
    if (passed("--k")) cfg.phase2.k = k;
    if (passed("--seed")) cfg.phase2.seed = seed;
    if (passed("--tol")) cfg.phase2.tol = tol;
    if (passed("--max-iters")) cfg.phase2.max_iters = max_iters;
    if (passed("--k-min")) cfg.phase2.k_min = k_min;
    if (passed("--k-max")) cfg.phase2.k_max = k_max;
    if (passed("--pos-filter")) cfg.phase2.pos_filter = pos_filter;
    if (passed("--deviation-mode")) cfg.phase2.deviation_mode = deviation_mode;
    if (passed("--no-rescore-baselines")) cfg.phase2.rescore_baselines = !no_rescore;
    if (passed("--min-cell-size")) cfg.metrics.min_cell_size = min_cell_size;
    if (passed("--decision-threshold"))
      cfg.metrics.decision_threshold = decision_threshold;
    if (passed("--strategy")) cfg.mitigation.strategy = geolex::parse_strategy(strategy);
    if (passed("--unk-token")) cfg.mitigation.unk_token = unk_token;
    if (passed("--quota-k")) cfg.mitigation.k = quota_k;
    if (passed("--mitigation-seed")) cfg.mitigation.seed = mitigation_seed;
    if (passed("--quota-formula")) {
      if (quota_formula == "as_printed")
        cfg.mitigation.quota_formula = geolex::QuotaFormula::kAsPrinted;
      else if (quota_formula == "min")
        cfg.mitigation.quota_formula = geolex::QuotaFormula::kMinVariant;
      else throw geolex::ConfigError("unknown quota_formula: " + quota_formula);
    }
    if (passed("--target-terms")) cfg.mitigation.target_terms = target_terms;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geolex: audits black-box toxicity scorers for cross-geographic "
               "lexical biases"};
  app.set_version_flag("--version", geolex::kVersion);
  app.fallthrough();
  app.require_subcommand(1);

  CliOverrides opts;
  opts.register_options(app);

  CLI::App* phase1 = app.add_subcommand("phase1", "select per-country candidate terms");
  CLI::App* phase2 = app.add_subcommand("phase2", "perturb templates and cluster terms");
  CLI::App* metrics = app.add_subcommand("metrics", "per-term and per-cluster bias metrics");
  CLI::App* mitigate = app.add_subcommand("mitigate", "emit a mitigation dataset");
  CLI::App* scan_k = app.add_subcommand("scan-k", "inertia across a k range");
  CLI::App* report = app.add_subcommand("report", "consolidated text report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "geolex: error: " << e.what() << "\n";
    return 2;
  }

  std::string stage = "setup";
  try {
    const RunConfig cfg = opts.build();
    if (phase1->parsed()) {
      stage = "phase1";
      auto cands = geolex::cmd_phase1(cfg);
      size_t total = 0;
      for (const auto& [_, rows] : cands) total += rows.size();
      std::cout << "phase1: " << total << " candidate terms across "
                << cands.size() << " countries -> " << cfg.output_dir << "\n";
    } else if (phase2->parsed()) {
      stage = "phase2";
      auto model = geolex::cmd_phase2(cfg);
      std::cout << "phase2: clustered " << model.assignments.size() << " terms into k="
                << model.k << " (inertia " << geolex::format_double(model.inertia)
                << ") -> " << cfg.output_dir << "\n";
    } else if (metrics->parsed()) {
      stage = "metrics";
      auto res = geolex::cmd_metrics(cfg);
      std::cout << "metrics: " << res.reports.size() << " term reports, "
                << res.aggregates.size() << " clusters -> " << cfg.output_dir << "\n";
    } else if (mitigate->parsed()) {
      stage = "mitigate";
      auto res = geolex::cmd_mitigate(cfg);
      std::cout << "mitigate: wrote " << res.examples.size() << " instances -> "
                << cfg.output_dir << "\n";
      for (const auto& d : res.diagnostics) std::cerr << "mitigate: note: " << d << "\n";
    } else if (scan_k->parsed()) {
      stage = "scan-k";
      auto rows = geolex::cmd_scan_k(cfg);
      for (const auto& r : rows)
        std::cout << "k=" << r.k << " inertia=" << geolex::format_double(r.inertia)
                  << "\n";
    } else if (report->parsed()) {
      stage = "report";
      geolex::cmd_report(cfg);
      std::cout << "report: wrote " << cfg.output_dir << "/report.txt\n";
    }
  } catch (const geolex::Error& e) {
    std::cerr << "geolex " << stage << ": error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "geolex " << stage << ": internal error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
