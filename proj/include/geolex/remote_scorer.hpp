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
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "geolex/error.hpp"
#include "geolex/scorer.hpp"

namespace geolex {

struct RemoteScorerConfig {
  std::string base_url;       // e.g. http://127.0.0.1:8080
  std::string path = "/score";
  std::string auth_token;     // sent as a bearer token when non-empty
  int max_retries = 3;        // retries after the first attempt
  int backoff_initial_ms = 100;
  double backoff_multiplier = 2.0;
  int timeout_sec = 10;

  void validate() const {
    if (base_url.empty()) throw ConfigError("remote scorer base_url is required");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (backoff_initial_ms < 0) throw ConfigError("backoff_initial_ms must be >= 0");
    if (!(backoff_multiplier >= 1.0))
      throw ConfigError("backoff_multiplier must be >= 1");
    if (timeout_sec <= 0) throw ConfigError("timeout_sec must be > 0");
  }
};

// HTTP scorer client. POSTs {"text": ...} and expects {"score": s} with
// s in [0,1]. Transport failures and 5xx responses are retried with
// exponential backoff; 4xx responses and malformed replies are permanent.
class RemoteScorer : public Scorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    client_ = std::make_unique<httplib::Client>(cfg_.base_url);
    if (!client_->is_valid())
      throw ConfigError("cannot parse remote scorer url: " + cfg_.base_url);
    client_->set_connection_timeout(cfg_.timeout_sec, 0);
    client_->set_read_timeout(cfg_.timeout_sec, 0);
    client_->set_write_timeout(cfg_.timeout_sec, 0);
    if (!cfg_.auth_token.empty()) client_->set_bearer_token_auth(cfg_.auth_token);
  }

  double score(const std::string& text) override {
    nlohmann::json req;
    req["text"] = text;
    const std::string body = req.dump();

    int delay_ms = cfg_.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        delay_ms = static_cast<int>(delay_ms * cfg_.backoff_multiplier);
      }
      httplib::Result res;
      {
        std::lock_guard<std::mutex> lock(mu_);
        res = client_->Post(cfg_.path, body, "application/json");
      }
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error: HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400)
        throw RemoteScorerError("remote scorer rejected request: HTTP " +
                                std::to_string(res->status) + " " + snippet(res->body));
      if (res->status != 200)
        throw RemoteScorerError("unexpected HTTP status " + std::to_string(res->status));
      return parse_score(res->body);
    }
    throw RemoteScorerError("remote scorer unreachable after " +
                            std::to_string(cfg_.max_retries + 1) + " attempts (" +
                            last_error + ")");
  }

  std::string id() const override { return "remote:" + cfg_.base_url + cfg_.path; }

 private:
  static std::string snippet(const std::string& body) {
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
  }

  static double parse_score(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw RemoteScorerError("remote scorer returned non-JSON body: " + snippet(body));
    }
    if (!j.is_object() || !j.contains("score") || !j["score"].is_number())
      throw RemoteScorerError("remote scorer response missing numeric 'score': " +
                              snippet(body));
    const double s = j["score"].get<double>();
    if (!(s >= 0.0 && s <= 1.0))
      throw RemoteScorerError("remote scorer returned score outside [0,1]: " +
                              format_double(s));
    return s;
  }

  RemoteScorerConfig cfg_;
  std::unique_ptr<httplib::Client> client_;
  std::mutex mu_;
};

}  // namespace geolex
