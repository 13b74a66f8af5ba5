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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geolex/util.hpp"

namespace geolex {

enum class Lemmatizer {
  kIdentity,
  kSimplePluralStrip,
  kPrecomputed,  // documents must carry lemmas; see document_terms()
};

struct NormalizationConfig {
  bool strip_urls = true;
  bool strip_hashtags = true;  // also strips @mentions
  bool strip_special_and_numeric = true;
  bool lowercase = true;
  Lemmatizer lemmatizer = Lemmatizer::kSimplePluralStrip;
};

namespace detail {

inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Bytes >= 0x80 are part of multi-byte UTF-8 sequences; without a full
// Unicode classifier we keep them as word characters so non-Latin text
// survives the special-character strip.
inline bool is_word_char(unsigned char c) {
  return is_ascii_alpha(static_cast<char>(c)) || c >= 0x80;
}

inline bool looks_like_url(std::string_view tok) {
  // scheme://... with an alphabetic scheme, or www.-prefixed.
  if (tok.size() >= 5) {
    bool www = true;
    const char* w = "www.";
    for (int i = 0; i < 4; ++i)
      if (ascii_lower(tok[i]) != w[i]) { www = false; break; }
    if (www) return true;
  }
  if (!tok.empty() && is_ascii_alpha(tok[0])) {
    for (size_t i = 1; i + 2 < tok.size(); ++i) {
      char c = tok[i];
      if (c == ':') return tok[i + 1] == '/' && tok[i + 2] == '/';
      if (!is_ascii_alpha(c) && !(c >= '0' && c <= '9') && c != '+' && c != '-' && c != '.')
        return false;
    }
  }
  return false;
}

inline bool is_ascii_vowel(char c) {
  c = ascii_lower(c);
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

inline std::string plural_strip_once(std::string_view w) {
  std::string lw = to_lower_ascii(w);
  std::string_view l = lw;
  auto l_ends = [&](std::string_view suf) {
    return l.size() >= suf.size() && l.substr(l.size() - suf.size()) == suf;
  };
  if (w.size() >= 4 && l_ends("ies"))
    return std::string(w.substr(0, w.size() - 3)) + "y";
  if (w.size() >= 4 && l_ends("es")) {
    char before = lw[w.size() - 3];
    bool sibilant = before == 's' || before == 'x' || before == 'z';
    if (!sibilant && w.size() >= 5) {
      std::string_view two = l.substr(l.size() - 4, 2);
      sibilant = two == "ch" || two == "sh";
    }
    if (sibilant) return std::string(w.substr(0, w.size() - 2));
  }
  if (w.size() >= 3 && l_ends("s") && !l_ends("ss")) {
    char before = lw[w.size() - 2];
    if (is_ascii_alpha(before) && !is_ascii_vowel(before) && before != 's')
      return std::string(w.substr(0, w.size() - 1));
  }
  return std::string(w);
}

}  // namespace detail

// Crude rule-based singularizer: "ies" -> "y", "es" after sibilants dropped,
// trailing "s" after a consonant dropped. The rules repeat until the word
// stops changing ("lapses" -> "laps" -> "lap"), so the output is always a
// fixed point and normalization stays idempotent.
inline std::string simple_plural_strip(std::string_view w) {
  std::string cur(w);
  for (;;) {
    std::string next = detail::plural_strip_once(cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
}

// Normalizes one whitespace-delimited token. Returns nullopt when the token
// is filtered out. Shared by counting, subgroup membership, and substitution
// so "contains term X" means the same thing everywhere.
inline std::optional<std::string> normalize_token(std::string_view tok,
                                                  const NormalizationConfig& cfg) {
  if (tok.empty()) return std::nullopt;
  if (cfg.strip_urls && detail::looks_like_url(tok)) return std::nullopt;
  if (cfg.strip_hashtags && (tok[0] == '#' || tok[0] == '@')) return std::nullopt;

  std::string out;
  out.reserve(tok.size());
  if (cfg.strip_special_and_numeric) {
    bool has_word_char = false;
    for (unsigned char c : tok) {
      if (detail::is_word_char(c)) {
        out.push_back(static_cast<char>(c));
        has_word_char = true;
      }
    }
    if (!has_word_char) return std::nullopt;
  } else {
    out.assign(tok);
  }
  if (cfg.lowercase)
    for (char& c : out) c = ascii_lower(c);
  if (cfg.lemmatizer == Lemmatizer::kSimplePluralStrip) out = simple_plural_strip(out);
  if (out.empty()) return std::nullopt;
  return out;
}

// Whitespace tokenization followed by per-token normalization. Idempotent:
// running the output back through yields the same terms.
inline std::vector<std::string> normalize(std::string_view text,
                                          const NormalizationConfig& cfg) {
  std::vector<std::string> terms;
  for (std::string_view tok : split_whitespace(text)) {
    if (auto t = normalize_token(tok, cfg)) terms.push_back(std::move(*t));
  }
  return terms;
}

}  // namespace geolex
