// Copyright 2026 The nlicheck Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nlicheck/generator.h"

#include <set>

#include "absl/strings/match.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "generator_oracle.h"
#include "nlicheck/lexicon.h"
#include "nlicheck/template_ast.h"
#include "test_util.h"

namespace nlicheck {
namespace {

using ::testing::HasSubstr;
using ::testing::IsEmpty;

const TemplateAst& BundledTemplate(const std::string& id) {
  for (const TemplateRecord& r : testing::BundledTemplates()) {
    if (r.ast.id == id) return r.ast;
  }
  ADD_FAILURE() << "no template " << id;
  static const TemplateAst empty;
  return empty;
}

TEST(WorkedExamplesTest, InstantiateVerbatim) {
  const LexiconStore& store = testing::BundledLexicons();
  ASSERT_OK_AND_ASSIGN(
      std::vector<testing::WorkedExample> examples,
      testing::LoadWorkedExamples(
          (testing::TestDataDir() / "worked_examples.json").string(), store));
  ASSERT_GE(examples.size(), 40u);
  std::set<std::string> covered;
  for (const testing::WorkedExample& ex : examples) {
    SCOPED_TRACE(ex.template_id + ": " + ex.premise);
    const TemplateAst& ast = BundledTemplate(ex.template_id);
    EXPECT_OK(CheckBinding(ast, ex.binding, store));
    ASSERT_OK_AND_ASSIGN(GeneratedExample generated,
                         Instantiate(ast, ex.binding, store));
    EXPECT_EQ(generated.premise, ex.premise);
    EXPECT_EQ(generated.hypothesis, ex.hypothesis);
    EXPECT_EQ(generated.gold, ex.gold);
    EXPECT_EQ(generated.Ambiguous(), ex.ambiguous);
    EXPECT_EQ(generated.template_id, ex.template_id);
    covered.insert(ex.template_id);
  }
  EXPECT_GE(covered.size(), 35u);
}

TEST(CountSpaceTest, SmallHandCountedSpaces) {
  ASSERT_OK_AND_ASSIGN(
      LexiconStore store,
      ParseLexicon("[A]\nx\ny\nz\n[B]\np\nq\n[N range=1..3]\n", "t.lex"));
  auto count = [&](const std::string& p) -> uint64_t {
    absl::StatusOr<TemplateAst> ast =
        ParseTemplate("P: " + p + " H: h. | label: e | cap: lexical");
    EXPECT_TRUE(ast.ok()) << ast.status();
    absl::StatusOr<SpaceCount> n = CountSpace(*ast, store);
    EXPECT_TRUE(n.ok()) << n.status();
    return n.ok() ? n->value : 0;
  };
  EXPECT_EQ(count("literal only."), 1u);
  EXPECT_EQ(count("{A} and {B}."), 6u);
  EXPECT_EQ(count("{N1} and {N2 < N1}."), 3u);
  EXPECT_EQ(count("{A1} {A2}."), 6u);
  EXPECT_EQ(count("{A1} {A2} {A3}."), 6u);
  EXPECT_EQ(count("{A1} {A2} {A3} {A4}."), 0u);
  EXPECT_EQ(count("{A} {x/y}."), 6u);
  EXPECT_EQ(count("{g:x/y} {g:p/q} {z/w}."), 4u);
  EXPECT_EQ(count("{N1} {N2}."), 6u);
  EXPECT_EQ(count("[rep i=1..2 : {A@i}]."), 3u + 6u);
  EXPECT_EQ(count("[rep i=1..2 : {A@i}] {N < count(i)}."), 0u + 6u * 1u);
}

TEST(CountSpaceTest, SaturatesAbove64Bits) {
  std::string lex = "[A]\n";
  for (int i = 0; i < 1000; ++i) lex += "w" + std::to_string(i) + "\n";
  ASSERT_OK_AND_ASSIGN(LexiconStore store, ParseLexicon(lex, "t.lex"));
  std::string p;
  for (int i = 1; i <= 8; ++i) p += "{A" + std::to_string(i) + "} ";
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast, ParseTemplate("P: " + p + ". H: h. | label: e | cap: lexical"));
  ASSERT_OK_AND_ASSIGN(SpaceCount n, CountSpace(ast, store));
  EXPECT_TRUE(n.saturated);
}

// For every bundled template over a reduced store, the stream yields exactly
// the set of bindings found by the independent brute-force walk.
TEST(CountSpaceTest, MatchesExhaustiveEnumerationOnEveryTemplate) {
  ASSERT_OK_AND_ASSIGN(
      LexiconStore reduced,
      testing::ReducedStore(testing::BundledLexicons(), 4, 6));
  int enumerated = 0;
  for (const TemplateRecord& record : testing::BundledTemplates()) {
    SCOPED_TRACE(record.ast.id);
    ASSERT_OK_AND_ASSIGN(std::set<std::string> oracle,
                         testing::BruteForceBindings(record.ast, reduced));
    ASSERT_OK_AND_ASSIGN(SpaceCount count, CountSpace(record.ast, reduced));
    EXPECT_FALSE(count.saturated);
    EXPECT_EQ(count.value, oracle.size());
    ASSERT_OK_AND_ASSIGN(BindingStream stream,
                         EnumerateBindings(record.ast, reduced, 11));
    std::set<std::string> streamed;
    uint64_t n = 0;
    while (std::optional<Binding> b = stream.Next()) {
      ++n;
      streamed.insert(testing::CanonicalBinding(*b));
    }
    EXPECT_EQ(n, streamed.size()) << "stream repeated a binding";
    EXPECT_TRUE(streamed == oracle);
    EXPECT_GT(oracle.size(), 0u);
    ++enumerated;
  }
  EXPECT_EQ(enumerated, static_cast<int>(testing::BundledTemplates().size()));
}

TEST(CountSpaceTest, MatchesExhaustiveEnumerationOnSmallBundledSpaces) {
  const LexiconStore& store = testing::BundledLexicons();
  int checked = 0;
  for (const TemplateRecord& record : testing::BundledTemplates()) {
    ASSERT_OK_AND_ASSIGN(SpaceCount count, CountSpace(record.ast, store));
    if (count.saturated || count.value >= 100000) continue;
    SCOPED_TRACE(record.ast.id);
    ASSERT_OK_AND_ASSIGN(std::set<std::string> oracle,
                         testing::BruteForceBindings(record.ast, store));
    EXPECT_EQ(count.value, oracle.size());
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(BindingStreamTest, DeterministicPerSeedAndDistinct) {
  const TemplateAst& ast = BundledTemplate("spatial-distance");
  const LexiconStore& store = testing::BundledLexicons();
  auto take = [&](uint64_t seed, int n) {
    std::vector<std::string> out;
    absl::StatusOr<BindingStream> stream = EnumerateBindings(ast, store, seed);
    EXPECT_TRUE(stream.ok());
    for (int i = 0; i < n; ++i) {
      std::optional<Binding> b = stream->Next();
      if (!b) break;
      EXPECT_OK(CheckBinding(ast, *b, store));
      out.push_back(testing::CanonicalBinding(*b));
    }
    return out;
  };
  std::vector<std::string> a = take(5, 2000);
  EXPECT_EQ(a, take(5, 2000));
  EXPECT_NE(a, take(6, 2000));
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), a.size());
}

TEST(CheckBindingTest, RejectsViolations) {
  const LexiconStore& store = testing::BundledLexicons();
  const TemplateAst& ast = BundledTemplate("impl-dollars");
  ASSERT_OK_AND_ASSIGN(
      std::vector<testing::WorkedExample> examples,
      testing::LoadWorkedExamples(
          (testing::TestDataDir() / "worked_examples.json").string(), store));
  Binding good;
  for (const auto& ex : examples) {
    if (ex.template_id == "impl-dollars") good = ex.binding;
  }
  ASSERT_OK(CheckBinding(ast, good, store));

  Binding violated = good;
  violated.assignments["N2"] = int64_t{300};
  EXPECT_FALSE(CheckBinding(ast, violated, store).ok());

  Binding same_name = good;
  same_name.assignments["NAME2"] = same_name.assignments["NAME1"];
  EXPECT_FALSE(CheckBinding(ast, same_name, store).ok());

  Binding missing = good;
  missing.assignments.erase("N1");
  EXPECT_FALSE(CheckBinding(ast, missing, store).ok());

  Binding out_of_range = good;
  out_of_range.assignments["N1"] = int64_t{100000};
  EXPECT_FALSE(CheckBinding(ast, out_of_range, store).ok());
}

TEST(GenerateSuiteTest, TargetsShortfallsAndConstraints) {
  std::vector<TemplateAst> asts = testing::BundledAsts();
  GenerationOptions options;
  options.seed = 3;
  options.default_target = 50;
  options.knowledge_target = 7;
  options.per_template["lex-antonym"] = 0;
  options.per_template["quant-none-some"] = 100000;
  options.threads = 2;
  ASSERT_OK_AND_ASSIGN(SuiteDataset suite,
                       GenerateSuite(asts, testing::BundledLexicons(), options));
  ASSERT_EQ(suite.metadata.report.size(), asts.size());
  for (size_t t = 0; t < asts.size(); ++t) {
    const TemplateGenerationReport& r = suite.metadata.report[t];
    SCOPED_TRACE(r.template_id);
    EXPECT_EQ(r.template_id, asts[t].id);
    uint64_t expected =
        asts[t].capability.group == CapabilityGroup::kKnowledge ? 7 : 50;
    if (r.template_id == "lex-antonym") expected = 0;
    if (r.template_id == "quant-none-some") expected = 100000;
    EXPECT_EQ(r.requested, expected);
    EXPECT_LE(r.produced, std::min<uint64_t>(expected, r.space));
    if (r.produced < r.requested) {
      EXPECT_THAT(r.note, HasSubstr("shortfall"));
    }
  }
  EXPECT_FALSE(suite.template_index.contains("lex-antonym"));
  EXPECT_EQ(suite.template_index.at("bool-or").size(), 50u);
  EXPECT_EQ(suite.template_index.at("world-lives-in").size(), 7u);
  for (const GeneratedExample& ex : suite.examples) {
    if (ex.template_id != "impl-dollars") continue;
    EXPECT_LT(std::stoll(ex.binding.at("N2")), std::stoll(ex.binding.at("N1")));
  }
}

TEST(GenerateSuiteTest, ExamplesAreCleanDistinctAndReproducible) {
  std::vector<TemplateAst> asts = testing::BundledAsts();
  const LexiconStore& store = testing::BundledLexicons();
  GenerationOptions options;
  options.seed = 17;
  options.default_target = 200;
  options.knowledge_target = 20;
  options.threads = 1;
  ASSERT_OK_AND_ASSIGN(SuiteDataset one, GenerateSuite(asts, store, options));
  options.threads = 4;
  ASSERT_OK_AND_ASSIGN(SuiteDataset two, GenerateSuite(asts, store, options));
  ASSERT_EQ(one.examples.size(), two.examples.size());
  for (size_t i = 0; i < one.examples.size(); ++i) {
    EXPECT_EQ(one.examples[i].example_id, two.examples[i].example_id);
    EXPECT_EQ(one.examples[i].premise, two.examples[i].premise);
    EXPECT_EQ(one.examples[i].hypothesis, two.examples[i].hypothesis);
  }
  std::map<std::string, const TemplateAst*> by_id;
  for (const TemplateAst& ast : asts) by_id[ast.id] = &ast;
  std::set<std::tuple<std::string, std::string, std::string>> pairs;
  std::set<std::string> ids;
  for (const GeneratedExample& ex : one.examples) {
    for (const std::string* text : {&ex.premise, &ex.hypothesis}) {
      EXPECT_FALSE(absl::StrContains(*text, "{")) << *text;
      EXPECT_FALSE(absl::StrContains(*text, "}")) << *text;
    }
    EXPECT_TRUE(pairs.emplace(ex.template_id, ex.premise, ex.hypothesis).second);
    EXPECT_TRUE(ids.insert(ex.example_id).second);
    ASSERT_TRUE(ex.full_binding.has_value());
    EXPECT_OK(CheckBinding(*by_id.at(ex.template_id), *ex.full_binding, store));
    EXPECT_EQ(ex.gold, by_id.at(ex.template_id)->Gold());
  }

  options.seed = 18;
  ASSERT_OK_AND_ASSIGN(SuiteDataset other, GenerateSuite(asts, store, options));
  bool differs = false;
  for (size_t i = 0; i < std::min(one.examples.size(), other.examples.size());
       ++i) {
    differs |= one.examples[i].premise != other.examples[i].premise;
  }
  EXPECT_TRUE(differs);
}

TEST(GenerateSuiteTest, HardDiagnosticsFail) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {NOPE} x. H: y. | label: e | cap: lexical | id: bad"));
  GenerationOptions options;
  absl::StatusOr<SuiteDataset> suite =
      GenerateSuite({ast}, testing::BundledLexicons(), options);
  ASSERT_FALSE(suite.ok());
  EXPECT_THAT(suite.status().message(), HasSubstr("NOPE"));
}

TEST(GenerateSuiteTest, SeedsAndHashes) {
  EXPECT_EQ(TemplateSeed(1, "a"), TemplateSeed(1, "a"));
  EXPECT_NE(TemplateSeed(1, "a"), TemplateSeed(2, "a"));
  EXPECT_NE(TemplateSeed(1, "a"), TemplateSeed(1, "b"));
  std::vector<TemplateAst> asts = testing::BundledAsts();
  const std::string hash = CorpusHash(asts);
  EXPECT_EQ(hash, CorpusHash(testing::BundledAsts()));
  asts[0].label_dist.p[0] = 0.25;
  EXPECT_NE(hash, CorpusHash(asts));
}

}  // namespace
}  // namespace nlicheck
