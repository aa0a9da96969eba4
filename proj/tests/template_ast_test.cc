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

#include "nlicheck/template_ast.h"

#include <random>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlicheck/lexicon.h"
#include "test_util.h"

namespace nlicheck {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::IsEmpty;
using ::testing::SizeIs;

TEST(TemplateParseTest, AntonymTemplate) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {NAME} is {ADJ}. H: {NAME} is {Antonym(ADJ)}. | "
                    "label: contradiction 1.0 | cap: lexical"));
  EXPECT_EQ(ast.capability.name, "lexical");
  EXPECT_EQ(ast.capability.group, CapabilityGroup::kLinguistic);
  EXPECT_EQ(ast.Gold(), Label::kContradiction);
  EXPECT_DOUBLE_EQ(ast.GoldConfidence(), 1.0);
  EXPECT_FALSE(ast.ambiguous);
  std::vector<SlotRef> refs = CollectRefs(ast);
  ASSERT_THAT(refs, SizeIs(2));
  EXPECT_EQ(refs[0].Spelling(), "NAME");
  EXPECT_EQ(refs[1].Spelling(), "ADJ");
  int derivations = 0;
  for (const Slot& s : ast.hypothesis) {
    if (s.kind == SlotKind::kDerivation) {
      ++derivations;
      EXPECT_EQ(s.function, "Antonym");
      EXPECT_EQ(s.ref.key, "ADJ");
    }
  }
  EXPECT_EQ(derivations, 1);
  ASSERT_THAT(ast.premise, SizeIs(4));
  EXPECT_EQ(ast.premise[1].kind, SlotKind::kLiteral);
  EXPECT_EQ(ast.premise[1].text, " is ");
  EXPECT_EQ(ast.premise[3].text, ".");
}

TEST(TemplateParseTest, IndicesAliasesAndArticles) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {NAME1} is {a/an} {PROF} and {NAME2} is too. H: "
                    "{NAME2} is {a/an} {PROF}. | label: entailment 1 | cap: "
                    "syntactic | id: t2"));
  EXPECT_EQ(ast.id, "t2");
  std::vector<SlotRef> refs = CollectRefs(ast);
  ASSERT_THAT(refs, SizeIs(3));
  EXPECT_EQ(refs[0].key, "NAME");
  EXPECT_EQ(refs[0].index, 1);
  EXPECT_EQ(refs[2].index, 2);
  EXPECT_EQ(ast.premise[2].kind, SlotKind::kArticle);
}

TEST(TemplateParseTest, SpacedKeyNamesAreNormalized) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {NAME1} is {COM ADJ} than {NAME2}. H: {NAME2} is "
                    "{COM ADJ} than {NAME1}. | label: contradiction 1 | cap: "
                    "comparative"));
  EXPECT_EQ(ast.premise[2].ref.key, "COM_ADJ");
}

TEST(TemplateParseTest, AlternationsAndConstraints) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {CITY1} is {N1} miles from {CITY2} and {N2 < N1} miles "
                    "from {CITY3}. H: {CITY1} is {d:nearer/farther} to "
                    "{d:CITY3/CITY2} than {d:CITY2/CITY3}. | label: "
                    "entailment 1 | cap: spatial"));
  const Slot* numeric = nullptr;
  for (const Slot& s : ast.premise) {
    if (s.kind == SlotKind::kNumeric) numeric = &s;
  }
  ASSERT_NE(numeric, nullptr);
  EXPECT_EQ(numeric->ref.Spelling(), "N2");
  EXPECT_EQ(numeric->constraint->op, CompareOp::kLess);
  EXPECT_EQ(std::get<SlotRef>(numeric->constraint->rhs).Spelling(), "N1");
  int alternations = 0;
  for (const Slot& s : ast.hypothesis) {
    if (s.kind != SlotKind::kAlternation) continue;
    ++alternations;
    EXPECT_EQ(s.group, "d");
    EXPECT_THAT(s.branches, SizeIs(2));
  }
  EXPECT_EQ(alternations, 3);
}

TEST(TemplateParseTest, ConstraintOperators) {
  for (const auto& [op, expected] :
       std::vector<std::pair<std::string, CompareOp>>{
           {"<", CompareOp::kLess},
           {">", CompareOp::kGreater},
           {"=", CompareOp::kEqual},
           {"<=", CompareOp::kLessEqual},
           {">=", CompareOp::kGreaterEqual},
           {"\xE2\x89\xA4", CompareOp::kLessEqual},
           {"\xE2\x89\xA5", CompareOp::kGreaterEqual}}) {
    ASSERT_OK_AND_ASSIGN(
        TemplateAst ast,
        ParseTemplate("P: {N1} and {N2 " + op + " 7}. H: x. | label: e | "
                      "cap: numerical"));
    EXPECT_EQ(ast.premise[2].constraint->op, expected) << op;
    EXPECT_EQ(std::get<int64_t>(ast.premise[2].constraint->rhs), 7);
  }
  EXPECT_TRUE(Compare(1, CompareOp::kLess, 2));
  EXPECT_FALSE(Compare(2, CompareOp::kLess, 2));
  EXPECT_TRUE(Compare(2, CompareOp::kLessEqual, 2));
  EXPECT_TRUE(Compare(3, CompareOp::kGreater, 2));
  EXPECT_TRUE(Compare(2, CompareOp::kGreaterEqual, 2));
  EXPECT_TRUE(Compare(2, CompareOp::kEqual, 2));
}

TEST(TemplateParseTest, RepetitionBlock) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: [rep i=2..6 sep=\", \" last=\" and \" : {NAME@i}] are "
                    "the only children of {NAME0}. H: {NAME0} has {count(i)} "
                    "children. | label: entailment 1 | cap: numerical"));
  const Slot& rep = ast.premise[0];
  ASSERT_EQ(rep.kind, SlotKind::kRepetition);
  EXPECT_EQ(rep.rep_var, "i");
  EXPECT_EQ(rep.rep_lo, 2);
  EXPECT_EQ(rep.rep_hi, 6);
  EXPECT_EQ(rep.separator, ", ");
  EXPECT_EQ(rep.last_separator, " and ");
  ASSERT_THAT(rep.body, SizeIs(1));
  EXPECT_EQ(rep.body[0].ref.Spelling(), "NAME@i");
  EXPECT_EQ(ast.premise[2].ref.index, 0);
  EXPECT_EQ(ast.hypothesis[2].kind, SlotKind::kCountRef);
}

TEST(TemplateParseTest, LabelDistributions) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ambiguous,
      ParseTemplate("P: a. H: b. | label: neutral 0.5; entailment 0.5 | cap: "
                    "implicature"));
  EXPECT_TRUE(ambiguous.ambiguous);
  EXPECT_EQ(ambiguous.Gold(), Label::kEntailment);
  EXPECT_DOUBLE_EQ(ambiguous.label_dist[Label::kNeutral], 0.5);

  ASSERT_OK_AND_ASSIGN(
      TemplateAst partial,
      ParseTemplate("P: a. H: b. | label: entailment 0.8 | cap: world"));
  EXPECT_FALSE(partial.ambiguous);
  EXPECT_DOUBLE_EQ(partial.label_dist[Label::kEntailment], 0.8);
  EXPECT_NEAR(partial.label_dist[Label::kNeutral], 0.1, 1e-12);
  EXPECT_NEAR(partial.label_dist[Label::kContradiction], 0.1, 1e-12);

  EXPECT_FALSE(
      ParseTemplate("P: a. H: b. | label: entailment 2 | cap: world").ok());

  ASSERT_OK_AND_ASSIGN(
      TemplateAst threshold,
      ParseTemplate("P: a. H: b. | label: entailment 0.7; neutral 0.3 | cap: "
                    "world"));
  EXPECT_FALSE(threshold.ambiguous);
}

TEST(TemplateParseTest, UnknownCapabilityIsRejected) {
  absl::StatusOr<TemplateAst> ast =
      ParseTemplate("P: a. H: b. | label: e | cap: factivity");
  ASSERT_FALSE(ast.ok());
  EXPECT_THAT(ast.status().message(), HasSubstr("factivity"));
}

struct ErrorCase {
  std::string source;
  std::string message;
  size_t offset;
};

TEST(TemplateParseTest, ErrorsCarryByteOffsets) {
  const std::vector<ErrorCase> cases = {
      {"P: {NAME is x. H: y. | label: e | cap: lexical", "'{'", 3},
      {"P: NAME} is x. H: y. | label: e | cap: lexical", "'}'", 7},
      {"P: {name} x. H: y. | label: e | cap: lexical", "unknown construct", 3},
      {"P: x {Antonym(ADJ)}. H: {ADJ}. | label: e | cap: lexical",
       "never-bound", 5},
      {"P: {g:a/b} {g:c/d/e}. H: y. | label: e | cap: lexical", "group g", 11},
      {"P: {count(i)} [rep i=1..2 : {NAME@i}]. H: y. | label: e | cap: "
       "numerical",
       "count(i)", 3},
      {"P: x. H: y. | label: maybe | cap: lexical", "unknown label", 13},
      {"P: x. H: y. | cap: lexical", "missing label", 12},
  };
  for (const ErrorCase& c : cases) {
    absl::StatusOr<TemplateAst> ast = ParseTemplate(c.source);
    ASSERT_FALSE(ast.ok()) << c.source;
    EXPECT_THAT(ast.status().message(), HasSubstr(c.message)) << c.source;
    EXPECT_EQ(ErrorOffset(ast.status()), c.offset)
        << c.source << " -> " << ast.status();
  }
}

TEST(TemplateParseTest, CapitalizeBindsItsSource) {
  ASSERT_OK_AND_ASSIGN(
      TemplateAst ast,
      ParseTemplate("P: {Capitalize(OBJ1)} and {OBJ2} lie on the table. H: "
                    "x {OBJ1}. | label: e | cap: implicature"));
  EXPECT_THAT(CollectRefs(ast), SizeIs(2));
}

TEST(TemplateSerializeTest, CanonicalSourcesRoundTripExactly) {
  const std::vector<std::string> sources = {
      "P: {NAME} is {ADJ}. H: {NAME} is {Antonym(ADJ)}. | label: "
      "contradiction 1.0 | cap: lexical | id: a",
      "P: {CITY1} is {N1} miles from {CITY2} and {N2 < N1} miles from "
      "{CITY3}. H: {CITY1} is {d:nearer/farther} to {d:CITY3/CITY2} than "
      "{d:CITY2/CITY3}. | label: entailment 1.0 | cap: spatial | id: b",
      "P: [rep i=2..6 sep=\", \" last=\" and \" : {NAME@i}] are the only "
      "children of {NAME0}. H: {NAME0} has {count(i)} children. | label: "
      "entailment 1.0 | cap: numerical | id: c",
      "P: {A/An} {OBJ} and {x/y/z}. H: [rep j=1..3 sep=\" \" : {OBJ@j}] {N3 >= "
      "count(j)}. | label: entailment 0.5; neutral 0.5 | cap: implicature",
  };
  for (const std::string& source : sources) {
    ASSERT_OK_AND_ASSIGN(TemplateAst ast, ParseTemplate(source));
    EXPECT_EQ(Serialize(ast), source);
  }
}

TEST(TemplateSerializeTest, BundledCorpusRoundTripsByteExactly) {
  const std::vector<TemplateRecord>& records = testing::BundledTemplates();
  ASSERT_GE(records.size(), 45u);
  for (const TemplateRecord& record : records) {
    EXPECT_EQ(Serialize(record.ast), record.source);
    ASSERT_OK_AND_ASSIGN(TemplateAst again, ParseTemplate(Serialize(record.ast)));
    EXPECT_TRUE(again == record.ast) << record.ast.id;
  }
}

// Random ASTs assembled from a grammar-covering pool of fragments survive
// Serialize -> ParseTemplate.
TEST(TemplateSerializeTest, RandomTemplatesRoundTrip) {
  const std::vector<std::string> fragments = {
      "{NAME1}", "{NAME2}", "{ADJ}", " is ", " and ", "{a/an} ", "{A/An} ",
      "{Antonym(ADJ)}", "{x/y}", "{g:p/q}", "{g:NAME1/NAME2}", "{N1}",
      "{N2 < N1}", "{N3 > 4}", "{N4 = N1}", ", ", ".", "'s ", "{Capitalize(OBJ)}",
      "[rep i=1..3 sep=\"; \" : {CITY@i}]", "{YEAR1 <= 2000}"};
  std::mt19937_64 rng(42);
  int parsed = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::string premise, hypothesis;
    int n = 1 + rng() % 8;
    for (int i = 0; i < n; ++i) premise += fragments[rng() % fragments.size()];
    int m = 1 + rng() % 5;
    for (int i = 0; i < m; ++i) {
      hypothesis += fragments[rng() % fragments.size()];
    }
    const std::string source = "P: " + premise + " H: " + hypothesis +
                               " | label: neutral 1 | cap: boolean";
    absl::StatusOr<TemplateAst> ast = ParseTemplate(source);
    if (!ast.ok()) continue;  // e.g. derivation before its source
    ++parsed;
    ASSERT_OK_AND_ASSIGN(TemplateAst again, ParseTemplate(Serialize(*ast)));
    EXPECT_TRUE(again == *ast) << source << "\n" << Serialize(*ast);
    EXPECT_EQ(Serialize(again), Serialize(*ast));
  }
  EXPECT_GT(parsed, 250);
}

TEST(TemplateCorpusTest, RecordsWrapAndGetDefaultIds) {
  ASSERT_OK_AND_ASSIGN(
      std::vector<TemplateRecord> records,
      ParseTemplateCorpus("# comment\nP: {NAME} is {ADJ}.\n  H: {NAME} is "
                          "{ADJ}. | label: e | cap: lexical\n\n"
                          "P: a. H: b. | label: n | cap: boolean | id: x\n",
                          "dir/seed.tmpl"));
  ASSERT_THAT(records, SizeIs(2));
  EXPECT_EQ(records[0].ast.id, "seed-1");
  EXPECT_EQ(records[0].line, 2);
  EXPECT_EQ(records[0].source,
            "P: {NAME} is {ADJ}. H: {NAME} is {ADJ}. | label: e | cap: "
            "lexical");
  EXPECT_EQ(records[1].ast.id, "x");
}

TEST(TemplateCorpusTest, DuplicateIdsAndBadRecordsAreReported) {
  absl::StatusOr<std::vector<TemplateRecord>> dup = ParseTemplateCorpus(
      "P: a. H: b. | label: e | cap: lexical | id: x\n\nP: a. H: c. | label: "
      "e | cap: lexical | id: x\n",
      "f.tmpl");
  ASSERT_FALSE(dup.ok());
  EXPECT_THAT(dup.status().message(), HasSubstr("duplicate"));

  absl::StatusOr<std::vector<TemplateRecord>> bad = ParseTemplateCorpus(
      "P: a. H: b. | label: e | cap: lexical\n\n\nP: {a. H: b. | label: e | "
      "cap: lexical\n",
      "f.tmpl");
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("f.tmpl:4"));
  EXPECT_EQ(ErrorOffset(bad.status()), 3u);
}

TEST(TemplateValidateTest, BundledCorpusValidatesCleanly) {
  for (const TemplateRecord& record : testing::BundledTemplates()) {
    EXPECT_THAT(Validate(record.ast, testing::BundledLexicons()), IsEmpty())
        << record.ast.id;
  }
}

TEST(TemplateValidateTest, EveryCapabilityIsCovered) {
  std::set<std::string> seen;
  for (const TemplateRecord& record : testing::BundledTemplates()) {
    seen.insert(record.ast.capability.name);
  }
  EXPECT_EQ(seen.size(), CapabilityRegistry::Default().All().size());
  EXPECT_EQ(CapabilityRegistry::Default().All().size(), 17u);
}

std::vector<DiagnosticKind> Kinds(const std::vector<Diagnostic>& diags) {
  std::vector<DiagnosticKind> out;
  for (const Diagnostic& d : diags) out.push_back(d.kind);
  return out;
}

TEST(TemplateValidateTest, Diagnostics) {
  ASSERT_OK_AND_ASSIGN(
      LexiconStore store,
      ParseLexicon("[NAME]\nJim\nAnn\n[ADJ]\nhappy\nblue\n[N range=1..3]\n"
                   "[derivation:Antonym]\nhappy -> sad\n",
                   "t.lex"));
  auto diags = [&](const std::string& p, const std::string& h) {
    absl::StatusOr<TemplateAst> ast = ParseTemplate(
        "P: " + p + " H: " + h + " | label: e | cap: lexical");
    EXPECT_TRUE(ast.ok()) << ast.status();
    return Kinds(Validate(*ast, store));
  };
  EXPECT_THAT(diags("{NAME} is {ADJ}.", "{NAME} is {Antonym(ADJ)}."),
              IsEmpty());
  EXPECT_THAT(diags("{CITY} x.", "y."),
              ElementsAre(DiagnosticKind::kUnknownKey));
  EXPECT_THAT(diags("{ADJ} x.", "{Synonym(ADJ)}."),
              ElementsAre(DiagnosticKind::kUnknownDerivation));
  EXPECT_THAT(diags("{NAME1} {NAME2} {NAME3}.", "y."),
              ElementsAre(DiagnosticKind::kUnsatisfiableDistinctness));
  EXPECT_THAT(diags("{N1} {N2 > 5}.", "y."),
              ElementsAre(DiagnosticKind::kUnsatisfiableConstraint));
  EXPECT_THAT(diags("{NAME1} {N2 < NAME1}.", "y."),
              ElementsAre(DiagnosticKind::kNonNumericConstraint));
}

}  // namespace
}  // namespace nlicheck
