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
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "geolex/error.hpp"
#include "geolex/util.hpp"

namespace geolex {

// Token-occurrence counts for one corpus slice. Merging is commutative and
// associative, so shard-parallel counting reduces to the single-pass table.
struct TermCounts {
  std::unordered_map<std::string, uint64_t> counts;
  uint64_t total_tokens = 0;  // equals the sum of counts
  uint64_t doc_count = 0;

  void add_term(const std::string& term, uint64_t n = 1) {
    counts[term] += n;
    total_tokens += n;
  }

  void add_document(const std::vector<std::string>& terms) {
    for (const auto& t : terms) add_term(t);
    ++doc_count;
  }

  void merge(const TermCounts& other) {
    for (const auto& [term, n] : other.counts) counts[term] += n;
    total_tokens += other.total_tokens;
    doc_count += other.doc_count;
  }

  uint64_t count(const std::string& term) const {
    auto it = counts.find(term);
    return it == counts.end() ? 0 : it->second;
  }

  void check_invariant() const {
    uint64_t sum = 0;
    for (const auto& [_, n] : counts) sum += n;
    if (sum != total_tokens)
      throw InternalError("TermCounts invariant violated: total_tokens != sum of counts");
  }
};

inline TermCounts merge(const TermCounts& a, const TermCounts& b) {
  TermCounts out = a;
  out.merge(b);
  return out;
}

// Two-column text: header line `#total_tokens=N #docs=D`, then term TAB count
// sorted by descending count, term ascending.
inline void write_term_counts(std::ostream& out, const TermCounts& tc) {
  out << "#total_tokens=" << tc.total_tokens << " #docs=" << tc.doc_count << "\n";
  std::vector<std::pair<std::string, uint64_t>> rows(tc.counts.begin(), tc.counts.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [term, n] : rows) out << term << "\t" << n << "\n";
}

inline void write_term_counts_file(const std::string& path, const TermCounts& tc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  write_term_counts(out, tc);
}

inline TermCounts read_term_counts(std::istream& in) {
  TermCounts tc;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#total_tokens=", 0) != 0)
    throw InputError("term-count table missing #total_tokens header");
  auto parts = split_whitespace(line);
  if (parts.size() != 2 || parts[1].rfind("#docs=", 0) != 0)
    throw InputError("malformed term-count header: " + line);
  uint64_t declared_total =
      static_cast<uint64_t>(parse_int(parts[0].substr(14), "term-count header"));
  tc.doc_count = static_cast<uint64_t>(parse_int(parts[1].substr(6), "term-count header"));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split_char(line, '\t');
    if (cols.size() != 2) throw InputError("malformed term-count row: " + line);
    uint64_t n = static_cast<uint64_t>(parse_int(cols[1], "term count"));
    tc.counts[std::string(cols[0])] += n;
    tc.total_tokens += n;
  }
  if (tc.total_tokens != declared_total)
    throw InputError("term-count table header disagrees with rows");
  return tc;
}

inline TermCounts read_term_counts_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open term-count table: " + path);
  return read_term_counts(in);
}

}  // namespace geolex
