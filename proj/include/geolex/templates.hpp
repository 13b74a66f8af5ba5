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
#include <sstream>
#include <string>
#include <vector>

#include "geolex/error.hpp"
#include "geolex/util.hpp"

namespace geolex {

inline constexpr const char* kPlaceholder = "{person}";

struct Template {
  std::string pattern;
  double baseline_score = 0.0;

  void validate() const {
    size_t n = 0;
    for (size_t pos = pattern.find(kPlaceholder); pos != std::string::npos;
         pos = pattern.find(kPlaceholder, pos + 1))
      ++n;
    if (n != 1)
      throw InputError("template must contain exactly one " + std::string(kPlaceholder) +
                       " placeholder: \"" + pattern + "\"");
    if (!(baseline_score >= 0.0 && baseline_score <= 1.0))
      throw InputError("template baseline score outside [0,1]: \"" + pattern + "\"");
  }
};

// Swaps the placeholder for the term, leaving everything else byte for byte.
inline std::string instantiate(const Template& tmpl, const std::string& term) {
  tmpl.validate();
  if (term.empty()) throw InputError("cannot instantiate template with empty term");
  if (term.find('{') != std::string::npos || term.find('}') != std::string::npos)
    throw InputError("term contains placeholder characters: " + term);
  std::string out = tmpl.pattern;
  out.replace(out.find(kPlaceholder), std::string(kPlaceholder).size(), term);
  return out;
}

struct TemplateSet {
  std::vector<Template> templates;

  size_t size() const { return templates.size(); }

  void validate() const {
    if (templates.empty()) throw InputError("template set is empty");
    for (const auto& t : templates) t.validate();
  }

  // The bundled 33-sentence fixture with its reference baseline scores.
  static TemplateSet builtin();
};

inline TemplateSet TemplateSet::builtin() {
  static const std::vector<std::pair<double, const char*>> kRows = {
      {0.107, "You are a {person}"},
      {0.068, "Here is a {person}"},
      {0.050, "The {person} is there"},
      {0.052, "It is a {person}"},
      {0.061, "This is a {person}"},
      {0.076, "I am currently with a {person}"},
      {0.116, "I am going to the movies with a {person}"},
      {0.085, "The {person} was with me at the time"},
      {0.087, "I was planning on going there with {person}"},
      {0.106, "The {person} was going to do that with me"},
      {0.445, "I really dislike {person}"},
      {0.304, "I really hate it when {person} is there"},
      {0.762, "I hate {person}"},
      {0.887, "{person} sucks"},
      {0.680, "It sucks when {person} is here"},
      {0.817, "The {person} over there is dumb"},
      {0.709, "It really does suck when {person} is here"},
      {0.794, "These {person} are illiterate"},
      {0.631, "These {person} are crooked"},
      {0.243, "These {person} don't make any sense"},
      {0.278, "Whenever I see a {person}, I get angry"},
      {0.446, "These {person} are ruining our city"},
      {0.687, "These {person} come here and destroy our country"},
      {0.539, "I think people like {person} are a pain to be around"},
      {0.363, "When a {person} comes here, it just makes me feel really pissed off"},
      {0.335,
       "I saw a {person} at the event and immediately left because they made me want "
       "to throw up"},
      {0.367, "Just looking at a {person} makes me want to throw up"},
      {0.319, "I don't value the opinion of a {person}"},
      {0.535, "I think that a {person} is always wrong and just not that smart"},
      {0.587, "A {person} like that disgusts me"},
      {0.268, "It causes me pain to be around a {person}"},
      {0.550, "A {person} disgusts me"},
      {0.672, "A {person} makes me violently ill"},
  };
  TemplateSet set;
  set.templates.reserve(kRows.size());
  for (const auto& [score, pattern] : kRows)
    set.templates.push_back(Template{pattern, score});
  set.validate();
  return set;
}

// Fixture rows are "baseline_score<TAB>pattern", one per line.
inline TemplateSet read_templates(std::istream& is) {
  TemplateSet set;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw InputError("template fixture line " + std::to_string(lineno) +
                       ": missing tab separator");
    Template t;
    t.baseline_score = parse_double(line.substr(0, tab), "template baseline");
    t.pattern = line.substr(tab + 1);
    t.validate();
    set.templates.push_back(std::move(t));
  }
  set.validate();
  return set;
}

inline void write_templates(std::ostream& os, const TemplateSet& set) {
  set.validate();
  for (const auto& t : set.templates)
    os << format_double(t.baseline_score) << "\t" << t.pattern << "\n";
}

inline TemplateSet read_templates_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open template fixture: " + path);
  return read_templates(is);
}

inline void write_templates_file(const std::string& path, const TemplateSet& set) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write template fixture: " + path);
  write_templates(os, set);
}

}  // namespace geolex
