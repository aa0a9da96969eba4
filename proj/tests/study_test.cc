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

#include "nlicheck/study.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "absl/strings/str_join.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace nlicheck {
namespace {

using ::testing::HasSubstr;
using ::testing::SizeIs;

const std::vector<std::string>& Words() {
  static const auto* words = new std::vector<std::string>{
      "Mary", "John", "the", "cat", "is", "happy", "sad", "a", "doctor",
      "likes", "apples", "went", "home", "not", "tall", "red"};
  return *words;
}

std::string Sentence(std::mt19937_64& rng) {
  std::vector<std::string> w;
  const size_t n = 3 + rng() % 4;
  for (size_t i = 0; i < n; ++i) w.push_back(Words()[rng() % Words().size()]);
  return absl::StrJoin(w, " ") + ".";
}

std::vector<double> Embed(std::string_view premise,
                          std::string_view hypothesis) {
  std::vector<double> e(Words().size(), 1.0);
  for (std::string_view s : {premise, hypothesis}) {
    for (const Token& t : Tokenize(s)) {
      auto it = std::find(Words().begin(), Words().end(), t.text);
      if (it != Words().end()) e[it - Words().begin()] += 1.0;
    }
  }
  return e;
}

LabelDist Probs(std::string_view, std::string_view hypothesis) {
  const bool negated = hypothesis.find("not") != std::string_view::npos;
  LabelDist d;
  d.p = negated ? std::array<double, 3>{0.1, 0.2, 0.7}
                : std::array<double, 3>{0.6, 0.3, 0.1};
  return d;
}

// 40 templates of 10 examples over all registered capabilities; template t
// gets t % 11 examples right, so every histogram bin is populated.
struct StudyFixture {
  SuiteDataset suite;
  std::vector<PredictionRecord> records;
  CapabilityReport report;
};

const StudyFixture& Fixture() {
  static const StudyFixture* const fixture = [] {
    auto* f = new StudyFixture();
    std::mt19937_64 rng(99);
    const auto& caps = CapabilityRegistry::Default().All();
    for (int t = 0; t < 40; ++t) {
      char id[8];
      std::snprintf(id, sizeof(id), "t%02d", t);
      for (int i = 0; i < 10; ++i) {
        GeneratedExample ex;
        ex.template_id = id;
        ex.example_id = std::string(id) + "#" + std::to_string(i);
        ex.capability = caps[t % caps.size()];
        ex.premise = Sentence(rng);
        ex.hypothesis = Sentence(rng);
        ex.gold = static_cast<Label>(t % 3);
        ex.gold_confidence = t == 39 ? 0.5 : 1.0;
        f->suite.examples.push_back(ex);
        PredictionRecord r;
        r.example_id = ex.example_id;
        r.model_id = "toy";
        r.predicted = i < t % 11
                          ? ex.gold
                          : static_cast<Label>((static_cast<int>(ex.gold) + 1) %
                                               3);
        r.probs.p = {0.1, 0.1, 0.1};
        r.probs.p[static_cast<int>(r.predicted)] = 0.8;
        r.embedding = Embed(ex.premise, ex.hypothesis);
        f->records.push_back(r);
      }
    }
    f->suite.RebuildIndex();
    f->report = *BuildCapabilityReport(f->suite, f->records,
                                       CapabilityRegistry::Default());
    return f;
  }();
  return *fixture;
}

StudyBuildOptions SmallPanels(uint64_t seed) {
  StudyBuildOptions options;
  options.seed = seed;
  options.panel.lime.samples = 60;
  return options;
}

TEST(SelectTemplatesTest, PropertiesOverRandomReports) {
  std::mt19937_64 rng(1);
  const auto& caps = CapabilityRegistry::Default().All();
  for (int trial = 0; trial < 300; ++trial) {
    CapabilityReport report;
    const int m = 10 + static_cast<int>(rng() % 80);
    for (int t = 0; t < m; ++t) {
      TemplateVerdict v;
      v.template_id = "t" + std::to_string(t);
      v.capability = caps[rng() % caps.size()];
      v.accuracy = static_cast<double>(rng() % 101) / 100.0;
      v.n = 10;
      v.status = rng() % 12 == 0 ? TemplateStatus::kAmbiguousExcluded
                                 : ClassifyTemplate(v.accuracy);
      report.verdicts.push_back(v);
    }
    std::array<int, 5> bin_sizes = {0, 0, 0, 0, 0};
    std::set<CapabilityGroup> groups;
    std::map<std::string, const TemplateVerdict*> by_id;
    int eligible = 0;
    for (const TemplateVerdict& v : report.verdicts) {
      by_id[v.template_id] = &v;
      if (v.status == TemplateStatus::kAmbiguousExcluded) continue;
      ++eligible;
      ++bin_sizes[HistogramBin(v.accuracy)];
      groups.insert(v.capability.group);
    }
    const size_t n = 1 + rng() % std::max(1, eligible / 2);
    const uint64_t seed = rng();
    SCOPED_TRACE(::testing::Message() << "trial " << trial << " n " << n);
    ASSERT_OK_AND_ASSIGN(std::vector<std::string> picked,
                         SelectTestTemplates(report, n, seed));
    ASSERT_THAT(picked, SizeIs(n));
    EXPECT_EQ(std::set<std::string>(picked.begin(), picked.end()).size(), n);
    ASSERT_OK_AND_ASSIGN(std::vector<std::string> again,
                         SelectTestTemplates(report, n, seed));
    EXPECT_EQ(picked, again);

    std::array<int, 5> covered = {0, 0, 0, 0, 0};
    std::set<CapabilityGroup> picked_groups;
    for (const std::string& id : picked) {
      const TemplateVerdict* v = by_id.at(id);
      EXPECT_NE(v->status, TemplateStatus::kAmbiguousExcluded);
      ++covered[HistogramBin(v->accuracy)];
      picked_groups.insert(v->capability.group);
    }
    int non_empty = 0;
    for (int b = 0; b < 5; ++b) non_empty += bin_sizes[b] > 0 ? 1 : 0;
    for (int b = 0; b < 5; ++b) {
      EXPECT_LE(covered[b], bin_sizes[b]);
      if (static_cast<int>(n) >= non_empty && bin_sizes[b] > 0) {
        EXPECT_GE(covered[b], 1) << "bin " << b;
      }
      // Proportional allocation, give or take the one-per-bin floor.
      const double share = static_cast<double>(n) * bin_sizes[b] / eligible;
      if (static_cast<int>(n) >= non_empty) {
        EXPECT_LE(std::abs(covered[b] - share), non_empty) << "bin " << b;
      }
    }
    if (n >= 3 && n >= 2 * static_cast<size_t>(non_empty)) {
      EXPECT_GE(picked_groups.size(), std::min<size_t>(3, groups.size()));
    }
  }
}

TEST(SelectTemplatesTest, TooFewTemplatesIsAnError) {
  const StudyFixture& f = Fixture();
  EXPECT_EQ(SelectTestTemplates(f.report, 40, 0).status().code(),
            absl::StatusCode::kFailedPrecondition);  // one is ambiguous
  EXPECT_OK(SelectTestTemplates(f.report, 39, 0).status());
}

class StudyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const StudyFixture& f = Fixture();
    predictor_ = new FunctionPredictor("toy", Probs, Embed);
    pool_ = new ExamplePool(ExamplePool::FromSuite(f.suite, f.records));
    absl::StatusOr<StudyDefinition> study = BuildStudy(
        f.report, f.suite, f.records, *pool_, *predictor_, SmallPanels(7));
    ASSERT_TRUE(study.ok()) << study.status();
    study_ = new StudyDefinition(*std::move(study));
  }
  static void TearDownTestSuite() {
    delete study_;
    delete pool_;
    delete predictor_;
  }

  static FunctionPredictor* predictor_;
  static ExamplePool* pool_;
  static StudyDefinition* study_;
};

FunctionPredictor* StudyTest::predictor_ = nullptr;
ExamplePool* StudyTest::pool_ = nullptr;
StudyDefinition* StudyTest::study_ = nullptr;

TEST_F(StudyTest, HasTwentyFiveTemplatesTimesFiveQuestions) {
  const StudyFixture& f = Fixture();
  const StudyDefinition& study = *study_;
  ASSERT_THAT(study.questions, SizeIs(125));
  ASSERT_THAT(study.template_ids, SizeIs(25));
  EXPECT_EQ(study.model_id, "toy");
  EXPECT_EQ(study.pool_id, "checklist");

  std::map<std::string, std::set<std::string>> per_template;
  std::array<int, 5> bins = {0, 0, 0, 0, 0};
  for (const std::string& id : study.template_ids) {
    for (const TemplateVerdict& v : f.report.verdicts) {
      if (v.template_id == id) ++bins[HistogramBin(v.accuracy)];
    }
  }
  for (int b = 0; b < 5; ++b) EXPECT_GE(bins[b], 1) << "bin " << b;

  for (size_t i = 0; i < study.questions.size(); ++i) {
    const StudyQuestion& q = study.questions[i];
    EXPECT_EQ(q.index, static_cast<int>(i));
    per_template[q.template_id].insert(q.example_id);
    const GeneratedExample* ex = f.suite.FindExample(q.example_id);
    ASSERT_NE(ex, nullptr);
    EXPECT_EQ(ex->template_id, q.template_id);
    EXPECT_EQ(ex->premise, q.premise);
    EXPECT_EQ(q.gold, ex->gold);
    if (i > 0) {
      EXPECT_NE(q.template_id, study.questions[i - 1].template_id)
          << "adjacent questions share a template at " << i;
    }
  }
  ASSERT_THAT(per_template, SizeIs(25));
  for (const auto& [id, examples] : per_template) {
    EXPECT_THAT(examples, SizeIs(5)) << id;
  }
}

TEST_F(StudyTest, PanelsNeverLeakTheTestTemplate) {
  const StudyFixture& f = Fixture();
  for (const StudyQuestion& q : study_->questions) {
    ASSERT_THAT(q.panel.neighbors, SizeIs(5));
    for (const PanelNeighbor& n : q.panel.neighbors) {
      const GeneratedExample* ex = f.suite.FindExample(n.id);
      ASSERT_NE(ex, nullptr);
      EXPECT_NE(ex->template_id, q.template_id);
      EXPECT_NE(n.id, q.example_id);
    }
    const nlohmann::ordered_json payload = QuestionPayload(*study_, q.index);
    const std::string text = payload.dump();
    EXPECT_EQ(payload["total"], 125);
    EXPECT_THAT(text, ::testing::Not(HasSubstr("model_predicted")));
    EXPECT_THAT(text, ::testing::Not(HasSubstr("\"gold\"")));
    EXPECT_THAT(text, ::testing::Not(HasSubstr("\"id\"")));
    EXPECT_THAT(text, ::testing::Not(HasSubstr(q.template_id + "#")));
    EXPECT_EQ(payload["test_example"]["premise"], q.premise);
    // Neighbour predictions are shown; the test prediction is not.
    EXPECT_TRUE(payload["panel"]["neighbors"][0].contains("predicted"));
  }
}

TEST_F(StudyTest, DeterministicAndJsonRoundTrips) {
  const StudyFixture& f = Fixture();
  ASSERT_OK_AND_ASSIGN(StudyDefinition again,
                       BuildStudy(f.report, f.suite, f.records, *pool_,
                                  *predictor_, SmallPanels(7)));
  EXPECT_EQ(StudyToJson(again), StudyToJson(*study_));
  ASSERT_OK_AND_ASSIGN(StudyDefinition back,
                       StudyFromJson(StudyToJson(*study_)));
  EXPECT_EQ(StudyToJson(back), StudyToJson(*study_));

  nlohmann::json broken = StudyToJson(*study_);
  broken["questions"][3]["index"] = 9;
  EXPECT_FALSE(StudyFromJson(broken).ok());
}

TEST_F(StudyTest, RejectsBadRequests) {
  const StudyFixture& f = Fixture();
  StudyBuildOptions options = SmallPanels(1);
  options.template_ids = {"t01", "t01"};
  EXPECT_FALSE(BuildStudy(f.report, f.suite, f.records, *pool_, *predictor_,
                          options)
                   .ok());
  options.template_ids = {"t01"};
  EXPECT_FALSE(BuildStudy(f.report, f.suite, f.records, *pool_, *predictor_,
                          options)
                   .ok());
  options.template_ids = {"t01", "t02"};
  options.questions_per_template = 11;
  EXPECT_FALSE(BuildStudy(f.report, f.suite, f.records, *pool_, *predictor_,
                          options)
                   .ok());
  FunctionPredictor other("other", Probs, Embed);
  options.questions_per_template = 2;
  absl::StatusOr<StudyDefinition> wrong_model =
      BuildStudy(f.report, f.suite, f.records, *pool_, other, options);
  ASSERT_FALSE(wrong_model.ok());
  EXPECT_THAT(std::string(wrong_model.status().message()), HasSubstr("toy"));
}

StudySession Sheet(const StudyDefinition& study, const std::string& who,
                   const std::vector<Label>& labels) {
  StudySession s;
  s.session_id = "s-" + who;
  s.participant_id = who;
  s.study_id = study.study_id;
  s.consent = true;
  for (size_t i = 0; i < labels.size(); ++i) {
    s.answers.push_back({static_cast<int>(i), labels[i], 1000 + (int64_t)i});
  }
  return s;
}

TEST_F(StudyTest, SheetEqualToModelPredictionsScoresFull) {
  std::vector<Label> model;
  std::vector<Label> gold;
  for (const StudyQuestion& q : study_->questions) {
    model.push_back(q.model_predicted);
    gold.push_back(q.gold);
  }
  ASSERT_OK_AND_ASSIGN(
      StudyResults results,
      ScoreStudy({Sheet(*study_, "a", model), Sheet(*study_, "b", gold)},
                 *study_));
  EXPECT_EQ(results.total, 125);
  ASSERT_THAT(results.participants, SizeIs(2));
  EXPECT_EQ(results.participants[0].accuracy, 125);
  EXPECT_EQ(results.participants[1].gold_accuracy, 125);
  int model_is_gold = 0;
  for (size_t i = 0; i < model.size(); ++i) model_is_gold += model[i] == gold[i];
  EXPECT_EQ(results.participants[1].accuracy, model_is_gold);
  EXPECT_EQ(results.participants[0].gold_accuracy, model_is_gold);
  ASSERT_THAT(results.pairs, SizeIs(1));
  EXPECT_EQ(results.pairs[0].agreement, model_is_gold);
}

// Oracle for mutual agreement from per-question label counts: the number of
// agreeing pairs on a question is sum over labels of C(count, 2).
TEST_F(StudyTest, ScoresMatchPairCountOracleAndArePermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t m = 2 + rng() % 6;
    std::vector<StudySession> sessions;
    for (size_t p = 0; p < m; ++p) {
      std::vector<Label> labels;
      for (const StudyQuestion& q : study_->questions) {
        labels.push_back(rng() % 3 == 0 ? q.model_predicted
                                        : static_cast<Label>(rng() % 3));
      }
      sessions.push_back(Sheet(*study_, "p" + std::to_string(p), labels));
    }
    ASSERT_OK_AND_ASSIGN(StudyResults results, ScoreStudy(sessions, *study_));

    double agreeing_pairs = 0.0;
    for (const StudyQuestion& q : study_->questions) {
      std::array<int, 3> counts = {0, 0, 0};
      for (const StudySession& s : sessions) {
        ++counts[static_cast<int>(s.answers[q.index].label)];
      }
      for (int c : counts) agreeing_pairs += c * (c - 1) / 2;
    }
    const double pairs = static_cast<double>(m * (m - 1) / 2);
    EXPECT_NEAR(results.mutual_agreement, agreeing_pairs / pairs, 1e-9);

    // Mean and sample sd from raw sums.
    double s1 = 0.0;
    double s2 = 0.0;
    for (const StudySession& s : sessions) {
      int acc = 0;
      for (const StudyQuestion& q : study_->questions) {
        acc += s.answers[q.index].label == q.model_predicted;
      }
      s1 += acc;
      s2 += static_cast<double>(acc) * acc;
    }
    EXPECT_NEAR(results.mean_accuracy, s1 / m, 1e-9);
    EXPECT_NEAR(results.sd_accuracy,
                std::sqrt((s2 - s1 * s1 / m) / (m - 1)), 1e-9);

    std::vector<StudySession> shuffled = sessions;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ASSERT_OK_AND_ASSIGN(StudyResults again, ScoreStudy(shuffled, *study_));
    EXPECT_EQ(ResultsToJson(again), ResultsToJson(results));
  }
}

TEST_F(StudyTest, IncompleteOrForeignSessionsAreRejected) {
  std::vector<Label> labels(125, Label::kNeutral);
  StudySession partial = Sheet(*study_, "a", labels);
  partial.answers.pop_back();
  absl::StatusOr<StudyResults> got = ScoreStudy({partial}, *study_);
  ASSERT_FALSE(got.ok());
  EXPECT_THAT(std::string(got.status().message()), HasSubstr("s-a"));
  StudySession foreign = Sheet(*study_, "b", labels);
  foreign.study_id = "elsewhere";
  EXPECT_FALSE(ScoreStudy({foreign}, *study_).ok());
  ASSERT_OK_AND_ASSIGN(StudyResults single,
                       ScoreStudy({Sheet(*study_, "c", labels)}, *study_));
  EXPECT_EQ(single.sd_accuracy, 0.0);
  EXPECT_TRUE(single.pairs.empty());
}

}  // namespace
}  // namespace nlicheck
