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

#include <gtest/gtest.h>

#include <sstream>

#include "geolex/templates.hpp"
#include "support/temp_dir.hpp"

namespace {

using namespace geolex;

TEST(Templates, BuiltinFixtureShape) {
  TemplateSet set = TemplateSet::builtin();
  EXPECT_EQ(set.size(), 33u);
  EXPECT_NO_THROW(set.validate());
  for (const auto& t : set.templates) {
    EXPECT_NE(t.pattern.find(kPlaceholder), std::string::npos);
    EXPECT_GE(t.baseline_score, 0.0);
    EXPECT_LE(t.baseline_score, 1.0);
  }
}

TEST(Templates, BuiltinSpotValues) {
  TemplateSet set = TemplateSet::builtin();
  auto baseline_of = [&](const std::string& pattern) -> double {
    for (const auto& t : set.templates)
      if (t.pattern == pattern) return t.baseline_score;
    ADD_FAILURE() << "missing template: " << pattern;
    return -1.0;
  };
  EXPECT_EQ(baseline_of("You are a {person}"), 0.107);
  EXPECT_EQ(baseline_of("{person} sucks"), 0.887);
  EXPECT_EQ(baseline_of("I hate {person}"), 0.762);
  EXPECT_EQ(baseline_of("These {person} are illiterate"), 0.794);
  EXPECT_EQ(baseline_of("A {person} makes me violently ill"), 0.672);
}

TEST(Templates, InstantiateReplacesThePlaceholder) {
  Template t{"You are a {person}", 0.107};
  EXPECT_EQ(instantiate(t, "chutiya"), "You are a chutiya");
  Template lead{"{person} sucks", 0.887};
  EXPECT_EQ(instantiate(lead, "that guy"), "that guy sucks");
}

TEST(Templates, InstantiateRejectsBadInput) {
  Template t{"You are a {person}", 0.107};
  EXPECT_THROW(instantiate(t, ""), InputError);
  EXPECT_THROW(instantiate(t, "a{b"), InputError);
  EXPECT_THROW(instantiate(t, "a}b"), InputError);

  Template none{"no placeholder here", 0.5};
  EXPECT_THROW(instantiate(none, "x"), InputError);
  Template twice{"{person} and {person}", 0.5};
  EXPECT_THROW(instantiate(twice, "x"), InputError);
  Template bad_score{"a {person}", 1.5};
  EXPECT_THROW(instantiate(bad_score, "x"), InputError);
}

TEST(Templates, StreamRoundTripPreservesAllRows) {
  TemplateSet set = TemplateSet::builtin();
  std::ostringstream os;
  write_templates(os, set);
  std::istringstream is(os.str());
  TemplateSet back = read_templates(is);
  ASSERT_EQ(back.size(), set.size());
  for (size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back.templates[i].pattern, set.templates[i].pattern) << i;
    // format_double output parses back to the identical double.
    EXPECT_EQ(back.templates[i].baseline_score, set.templates[i].baseline_score) << i;
  }
}

TEST(Templates, FileRoundTripAndErrors) {
  testsupport::ScopedTempDir tmp;
  const std::string path = tmp.str("templates.tsv");
  write_templates_file(path, TemplateSet::builtin());
  TemplateSet back = read_templates_file(path);
  EXPECT_EQ(back.size(), 33u);
  EXPECT_THROW(read_templates_file(tmp.str("missing.tsv")), InputError);
}

TEST(Templates, ParserRejectsMalformedRows) {
  {
    std::istringstream is("0.5 no tab separator\n");
    EXPECT_THROW(read_templates(is), InputError);
  }
  {
    std::istringstream is("abc\ta {person}\n");
    EXPECT_THROW(read_templates(is), InputError);
  }
  {
    std::istringstream is("0.5\tmissing placeholder\n");
    EXPECT_THROW(read_templates(is), InputError);
  }
  {
    std::istringstream is("");
    EXPECT_THROW(read_templates(is), InputError);  // empty set
  }
}

}  // namespace
