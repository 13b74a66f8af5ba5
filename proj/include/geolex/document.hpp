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

#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geolex/error.hpp"
#include "geolex/normalize.hpp"

namespace geolex {

// One text unit: a tweet, comment, or any short document tagged with the
// country it came from. model_score is the black-box scorer output when it
// has already been collected; lemmas/pos_tags are optional precomputed
// annotations aligned index-by-index.
struct Document {
  std::string id;
  std::string text;
  std::string country;  // ISO-3166 alpha-2
  std::optional<double> model_score;
  std::optional<bool> gold_label;
  std::optional<std::vector<std::string>> lemmas;
  std::optional<std::vector<std::string>> pos_tags;

  void validate() const {
    if (model_score && (*model_score < 0.0 || *model_score > 1.0))
      throw InputError("document " + id + ": model_score outside [0,1]");
    if (lemmas && pos_tags && lemmas->size() != pos_tags->size())
      throw InputError("document " + id + ": lemmas/pos_tags length mismatch");
  }
};

inline Document document_from_json(const nlohmann::json& j) {
  Document d;
  try {
    d.id = j.at("id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.country = j.at("country").get<std::string>();
    if (j.contains("model_score") && !j["model_score"].is_null())
      d.model_score = j["model_score"].get<double>();
    if (j.contains("gold_label") && !j["gold_label"].is_null())
      d.gold_label = j["gold_label"].get<bool>();
    if (j.contains("lemmas") && !j["lemmas"].is_null())
      d.lemmas = j["lemmas"].get<std::vector<std::string>>();
    if (j.contains("pos_tags") && !j["pos_tags"].is_null())
      d.pos_tags = j["pos_tags"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad document record: ") + e.what());
  }
  d.validate();
  return d;
}

inline nlohmann::json document_to_json(const Document& d) {
  nlohmann::json j;
  j["id"] = d.id;
  j["text"] = d.text;
  j["country"] = d.country;
  if (d.model_score) j["model_score"] = *d.model_score;
  if (d.gold_label) j["gold_label"] = *d.gold_label;
  if (d.lemmas) j["lemmas"] = *d.lemmas;
  if (d.pos_tags) j["pos_tags"] = *d.pos_tags;
  return j;
}

inline Document parse_document_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw InputError("malformed JSON record: " + std::string(line.substr(0, 80)));
  return document_from_json(j);
}

// Streams newline-delimited records through `fn`; blank lines are skipped.
inline size_t for_each_document(std::istream& in,
                                const std::function<void(Document&&)>& fn) {
  std::string line;
  size_t n = 0;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(parse_document_line(line));
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(lineno) + ": " + e.what());
    }
    ++n;
  }
  return n;
}

inline std::vector<Document> read_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open documents file: " + path);
  std::vector<Document> docs;
  for_each_document(in, [&](Document&& d) { docs.push_back(std::move(d)); });
  return docs;
}

inline void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << document_to_json(d).dump() << "\n";
}

// Terms of a document under a config. With the precomputed lemmatizer the
// supplied lemmas are used (still passing each through the token filters);
// otherwise the raw text is normalized.
inline std::vector<std::string> document_terms(const Document& doc,
                                               const NormalizationConfig& cfg) {
  if (cfg.lemmatizer == Lemmatizer::kPrecomputed) {
    if (!doc.lemmas)
      throw InputError("document " + doc.id +
                       ": precomputed lemmatizer requested but no lemmas present");
    NormalizationConfig filter_only = cfg;
    filter_only.lemmatizer = Lemmatizer::kIdentity;
    std::vector<std::string> terms;
    for (const auto& lemma : *doc.lemmas) {
      if (auto t = normalize_token(lemma, filter_only)) terms.push_back(std::move(*t));
    }
    return terms;
  }
  return normalize(doc.text, cfg);
}

}  // namespace geolex
