// Copyright 2026 The snas Authors.
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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "snas/grammar.hpp"
#include "test_util.hpp"

namespace snas {
namespace {

using testing::im;
using testing::seq;

std::string trimmed(std::string s) {
  s.erase(0, s.find_first_not_of(" \n\r\t"));
  s.erase(s.find_last_not_of(" \n\r\t") + 1);
  return s;
}

TEST(Grammar, DefaultGrammarShape) {
  const Grammar& g = default_grammar();
  EXPECT_EQ(g.start(), "NET_IM");
  EXPECT_EQ(g.rules().size(), 2u);
  EXPECT_EQ(g.min_depth("NET_IM"), 1u);
  EXPECT_EQ(g.min_depth("NET_COL"), 1u);
}

TEST(Grammar, EmbeddedCopyMatchesShippedFile) {
  std::ifstream in(std::string(SNAS_SOURCE_DIR) + "/grammars/mini_einspace.json");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(trimmed(ss.str()), trimmed(std::string(kMiniEinspaceGrammar)));
}

TEST(Grammar, UndefinedNonterminalIsNamed) {
  const char* text = R"({"start": "A", "rules": {"A": [
      {"name": "s", "rhs": [{"op": {"kind": "sequential"}}, {"nt": "A"}, {"nt": "FOO"}]},
      {"name": "id", "rhs": [{"op": {"kind": "identity"}}]}]}})";
  try {
    load_grammar(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("FOO"), std::string::npos);
  }
}

TEST(Grammar, EmptyParamDomainRejected) {
  const char* text = R"({"start": "A", "rules": {"A": [
      {"name": "lin", "rhs": [{"op": {"kind": "linear", "params": {"d": "$d"}}}], "param_domains": {"d": []}}]}})";
  EXPECT_THROW(load_grammar(text), ValidationError);
}

TEST(Grammar, UnboundParameterRejected) {
  const char* text = R"({"start": "A", "rules": {"A": [
      {"name": "lin", "rhs": [{"op": {"kind": "linear", "params": {"d": "$d"}}}]}]}})";
  EXPECT_THROW(load_grammar(text), ValidationError);
}

TEST(Grammar, UnknownOpRejected) {
  const char* text = R"({"start": "A", "rules": {"A": [{"name": "x", "rhs": [{"op": {"kind": "conv3d"}}]}]}})";
  EXPECT_THROW(load_grammar(text), ValidationError);
}

TEST(Grammar, FanoutOutsideBranchingRejected) {
  const char* text = R"({"start": "A", "rules": {"A": [
      {"name": "x", "rhs": [{"op": {"kind": "sequential"}}, {"op": {"kind": "clone", "params": {"b": 2}}}, {"nt": "A"}]},
      {"name": "id", "rhs": [{"op": {"kind": "identity"}}]}]}})";
  EXPECT_THROW(load_grammar(text), ValidationError);
}

TEST(Grammar, MalformedJsonReportsPosition) {
  try {
    load_grammar("{\n  \"start\": \"A\",\n  \"rules\": {,}\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 1u);
  }
}

TEST(Grammar, DuplicateProductionRejected) {
  const char* text = R"({"start": "A", "rules": {"A": [
      {"name": "id", "rhs": [{"op": {"kind": "identity"}}]},
      {"name": "id", "rhs": [{"op": {"kind": "relu"}}]}]}})";
  EXPECT_THROW(load_grammar(text), ValidationError);
}

TEST(Sample, DepthOneUsesTerminalProductions) {
  const Grammar& g = default_grammar();
  Rng rng(3);
  std::map<std::string, int> seen;
  for (int i = 0; i < 200; ++i) {
    const auto t = sample_tree(g, 1, rng);
    EXPECT_TRUE(t.children.empty());
    EXPECT_FALSE(g.production_of(t).is_composite());
    ++seen[t.production];
  }
  EXPECT_EQ(seen.size(), 3u);  // norm, relu, identity
}

TEST(Sample, SameSeedSameTree) {
  const Grammar& g = default_grammar();
  Rng a(42), b(42);
  EXPECT_EQ(sample_tree(g, 10, a), sample_tree(g, 10, b));
}

TEST(Sample, RecursiveOnlyGrammarIsExhausted) {
  const char* text = R"({"start": "NET", "rules": {"NET": [
      {"name": "s", "rhs": [{"op": {"kind": "sequential"}}, {"nt": "NET"}, {"nt": "NET"}]}]}})";
  const Grammar g = load_grammar(text);
  EXPECT_EQ(g.min_depth("NET"), Grammar::kUnbounded);
  // Exhaustive expansion: every derivation of NET contains another NET, so
  // no tree of any depth is complete.
  for (std::size_t d = 1; d <= 20; ++d) {
    Rng rng(d);
    EXPECT_THROW(sample_tree(g, d, rng), SamplingExhausted);
  }
}

TEST(Sample, ZeroDepthRejected) {
  Rng rng(1);
  EXPECT_THROW(sample_tree(default_grammar(), 0, rng), ValidationError);
}

TEST(Sample, PropertySamplesAndMutantsAreValid) {
  const Grammar& g = default_grammar();
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t depth = 1 + static_cast<std::size_t>(i % 12);
    const auto t = sample_tree(g, depth, rng);
    EXPECT_LE(t.depth(), depth);
    EXPECT_NO_THROW(validate_tree(g, t, depth));
    const auto m = mutate_subtree(g, t, depth, rng);
    EXPECT_LE(m.depth(), depth);
    EXPECT_NO_THROW(validate_tree(g, m, depth));
  }
}

TEST(Sample, ValidateTreeRejectsForeignDomainValue) {
  const auto t = testing::conv(7, 1, 0, testing::col("relu"));
  EXPECT_THROW(validate_tree(default_grammar(), t, 12), ValidationError);
}

TEST(Mutate, SingleNodeTreeResamplesRoot) {
  const Grammar& g = default_grammar();
  Rng a(5), b(5);
  const auto t = im("relu");
  const auto m = mutate_subtree(g, t, 12, a);
  // Node choice consumes one draw from a range of size one; the rest is a
  // fresh sample of the start symbol.
  std::uniform_int_distribution<std::size_t>(0, 0)(b);
  EXPECT_EQ(m, sample_tree(g, 12, b));
}

TEST(Mutate, Deterministic) {
  const Grammar& g = default_grammar();
  const auto t = seq(seq(im("relu"), im("norm")), seq(im("identity"), im("relu")));
  ASSERT_EQ(t.size(), 7u);
  Rng a(9), b(9);
  EXPECT_EQ(mutate_subtree(g, t, 12, a), mutate_subtree(g, t, 12, b));
}

TEST(Mutate, NodeChoiceIsUniform) {
  // Every node of this 5-node tree is an NET_IM node; recording which one
  // the mutation picks needs the same draw the mutation makes.
  const Grammar& g = default_grammar();
  const auto t = seq(seq(im("relu"), im("norm")), im("identity"));
  ASSERT_EQ(t.size(), 5u);
  Rng rng(2026);
  std::vector<int> hits(5, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Rng probe = rng;
    const std::size_t index = std::uniform_int_distribution<std::size_t>(0, 4)(probe);
    (void)mutate_subtree(g, t, 12, rng);
    ++hits[index];
  }
  for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / draws, 0.2, 0.02);
}

TEST(Mutate, ReplaceAtKeepsOtherNodes) {
  const auto t = seq(im("relu"), im("norm"));
  const auto r = replace_at(t, 2, im("identity"));
  EXPECT_EQ(r, seq(im("relu"), im("identity")));
  EXPECT_THROW(replace_at(t, 3, im("relu")), std::out_of_range);
}

TEST(Mutate, DepthBudgetRespected) {
  const Grammar& g = default_grammar();
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    auto t = sample_tree(g, 4, rng);
    for (int j = 0; j < 5; ++j) {
      t = mutate_subtree(g, t, 4, rng);
      ASSERT_LE(t.depth(), 4u);
    }
  }
}

}  // namespace
}  // namespace snas
