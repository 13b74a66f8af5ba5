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

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "geolex/error.hpp"
#include "geolex/hash.hpp"
#include "geolex/normalize.hpp"
#include "geolex/util.hpp"

namespace geolex {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Black-box toxicity scorer. Implementations must be safe to call from
// multiple threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const std::string& text) = 0;
  // Stable identifier; part of every cache key, so two scorers that can
  // disagree must not share an id.
  virtual std::string id() const = 0;
};

// Term-weight lexicon backing the mock scorer. Weights apply to normalized
// tokens; score = logistic(bias + sum of matched weights).
struct MockLexicon {
  std::string name = "mock";
  double bias = -4.0;
  std::map<std::string, double> weights;

  static MockLexicon from_json(const nlohmann::json& j) {
    MockLexicon lex;
    try {
      lex.name = j.at("name").get<std::string>();
      lex.bias = j.at("bias").get<double>();
      for (const auto& [term, w] : j.at("weights").items())
        lex.weights[term] = w.get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("bad lexicon json: ") + e.what());
    }
    return lex;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["bias"] = bias;
    j["weights"] = nlohmann::json::object();
    for (const auto& [term, w] : weights) j["weights"][term] = w;
    return j;
  }

  static MockLexicon load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open lexicon file: " + path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("cannot parse lexicon file " + path + ": " + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write lexicon file: " + path);
    os << to_json().dump(2) << "\n";
  }
};

class MockScorer : public Scorer {
 public:
  explicit MockScorer(MockLexicon lexicon, NormalizationConfig norm = {})
      : lexicon_(std::move(lexicon)), norm_(norm) {}

  double score(const std::string& text) override {
    double x = lexicon_.bias;
    for (const auto& tok : normalize(text, norm_)) {
      auto it = lexicon_.weights.find(tok);
      if (it != lexicon_.weights.end()) x += it->second;
    }
    return logistic(x);
  }

  std::string id() const override { return "mock:" + lexicon_.name; }

  const MockLexicon& lexicon() const { return lexicon_; }

 private:
  MockLexicon lexicon_;
  NormalizationConfig norm_;
};

// Persistent score cache. Keyed by (scorer id, sha256 of the exact text).
// File rows are "sha256<TAB>scorer_id<TAB>score"; on load, later rows win.
class ScoreCache {
 public:
  ScoreCache() = default;

  static std::string key(const std::string& scorer_id, const std::string& text_sha) {
    return text_sha + "\t" + scorer_id;
  }

  std::optional<double> lookup(const std::string& scorer_id,
                               const std::string& text_sha) const {
    auto it = entries_.find(key(scorer_id, text_sha));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const std::string& scorer_id, const std::string& text_sha, double score) {
    if (!(score >= 0.0 && score <= 1.0))
      throw InputError("cache score outside [0,1] for scorer " + scorer_id);
    entries_[key(scorer_id, text_sha)] = score;
  }

  size_t size() const { return entries_.size(); }

  void load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open score cache: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto cols = split_char(line, '\t');
      if (cols.size() != 3)
        throw InputError("score cache " + path + " line " + std::to_string(lineno) +
                         ": expected 3 tab-separated fields");
      double s = parse_double(cols[2], "cached score");
      insert(std::string(cols[1]), std::string(cols[0]), s);
    }
  }

  // Rows sorted by key so identical caches serialize identically.
  void save(const std::string& path) const {
    std::map<std::string, double> sorted(entries_.begin(), entries_.end());
    std::ofstream os(path);
    if (!os) throw InputError("cannot write score cache: " + path);
    for (const auto& [k, v] : sorted) {
      auto tab = k.find('\t');
      os << k.substr(0, tab) << "\t" << k.substr(tab + 1) << "\t" << format_double(v)
         << "\n";
    }
  }

 private:
  std::unordered_map<std::string, double> entries_;
};

// Wraps a scorer with a shared cache. Thread safe.
class CachingScorer : public Scorer {
 public:
  CachingScorer(Scorer& inner, ScoreCache& cache) : inner_(inner), cache_(cache) {}

  double score(const std::string& text) override {
    const std::string sha = sha256_hex(text);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto hit = cache_.lookup(inner_.id(), sha)) {
        ++hits_;
        return *hit;
      }
    }
    const double s = inner_.score(text);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.insert(inner_.id(), sha, s);
    ++misses_;
    return s;
  }

  std::string id() const override { return inner_.id(); }
  uint64_t hits() const { return hits_; }
  uint64_t misses() const { return misses_; }

 private:
  Scorer& inner_;
  ScoreCache& cache_;
  std::mutex mu_;
  uint64_t hits_ = 0;
  uint64_t misses_ = 0;
};

// Paces calls to at most rate_per_sec. rate_per_sec <= 0 disables pacing.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_sec) : interval_ns_(0) {
    if (rate_per_sec > 0.0)
      interval_ns_ = static_cast<int64_t>(1e9 / rate_per_sec);
  }

  void acquire() {
    if (interval_ns_ == 0) return;
    std::unique_lock<std::mutex> lock(mu_);
    const int64_t now = now_ns();
    const int64_t at = std::max(now, next_);
    next_ = at + interval_ns_;
    lock.unlock();
    if (at > now)
      std::this_thread::sleep_for(std::chrono::nanoseconds(at - now));
  }

 private:
  static int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
  std::mutex mu_;
  int64_t interval_ns_;
  int64_t next_ = 0;
};

struct ScoreOutcome {
  std::optional<double> score;
  std::string error;  // set iff score is empty
  bool ok() const { return score.has_value(); }
};

struct BatchOptions {
  int max_in_flight = 4;
  double rate_per_sec = 0.0;
};

// Scores every text, preserving positions. Failures are recorded per item
// rather than aborting the batch.
inline std::vector<ScoreOutcome> score_batch(Scorer& scorer,
                                             const std::vector<std::string>& texts,
                                             const BatchOptions& opts = {}) {
  if (opts.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  std::vector<ScoreOutcome> out(texts.size());
  RateLimiter limiter(opts.rate_per_sec);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= texts.size()) return;
      limiter.acquire();
      try {
        const double s = scorer.score(texts[i]);
        if (!(s >= 0.0 && s <= 1.0)) {
          out[i].error = "scorer returned value outside [0,1]";
          continue;
        }
        out[i].score = s;
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const int n_threads =
      static_cast<int>(std::min<size_t>(texts.size(), static_cast<size_t>(opts.max_in_flight)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace geolex
