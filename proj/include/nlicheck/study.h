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

// Simulation studies: participants see a test pair plus an explanation panel
// and guess the label the model predicts for the pair.

#ifndef NLICHECK_STUDY_H_
#define NLICHECK_STUDY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "nlicheck/analysis.h"
#include "nlicheck/explainer.h"
#include "nlicheck/labels.h"
#include "nlicheck/predictions.h"
#include "nlicheck/suite.h"
#include "nlohmann/json.hpp"

namespace nlicheck {

struct StudyQuestion {
  int index = 0;
  std::string example_id;
  std::string template_id;
  std::string premise;
  std::string hypothesis;
  Label model_predicted = Label::kEntailment;
  Label gold = Label::kEntailment;
  ExplanationPanel panel;
};

struct StudyDefinition {
  std::string study_id;
  std::string model_id;
  std::string pool_id;
  uint64_t seed = 0;
  std::vector<std::string> template_ids;
  std::vector<StudyQuestion> questions;
};

// Stratified choice of n templates: the 5 accuracy bins get proportional
// quotas (each non-empty bin at least one), templates are drawn round-robin
// across capabilities within a bin, and the result spans at least three
// capability groups when the report has them.
absl::StatusOr<std::vector<std::string>> SelectTestTemplates(
    const CapabilityReport& report, size_t n, uint64_t seed);

struct StudyBuildOptions {
  std::string study_id = "study";
  size_t templates = 25;
  size_t questions_per_template = 5;
  uint64_t seed = 0;
  // When set, used instead of SelectTestTemplates.
  std::vector<std::string> template_ids;
  PanelOptions panel;
};

// Question examples and order depend only on the seed and the templates;
// panels depend on the model. No two consecutive questions share a template.
absl::StatusOr<StudyDefinition> BuildStudy(
    const CapabilityReport& report, const SuiteDataset& suite,
    const std::vector<PredictionRecord>& records, const ExamplePool& pool,
    Predictor& predictor, const StudyBuildOptions& options);

nlohmann::ordered_json StudyToJson(const StudyDefinition& study);
absl::StatusOr<StudyDefinition> StudyFromJson(const nlohmann::json& json);

// What a participant sees for one question: no gold label, no model
// prediction for the test pair, no template or capability metadata.
nlohmann::ordered_json QuestionPayload(const StudyDefinition& study,
                                       int index);

struct StudyAnswer {
  int index = 0;
  Label label = Label::kEntailment;
  int64_t timestamp_ms = 0;
};

struct StudySession {
  std::string session_id;
  std::string participant_id;
  std::string study_id;
  bool consent = false;
  std::vector<StudyAnswer> answers;

  int cursor() const { return static_cast<int>(answers.size()); }
};

struct ParticipantScore {
  std::string participant_id;
  std::string session_id;
  int accuracy = 0;       // answers equal to the model's prediction
  int gold_accuracy = 0;  // answers equal to the gold label
};

struct PairAgreement {
  std::string a;
  std::string b;
  int agreement = 0;
};

struct QuestionScore {
  int index = 0;
  double model_match = 0.0;  // fraction of participants
  double gold_match = 0.0;
};

struct StudyResults {
  std::string study_id;
  int total = 0;
  std::vector<ParticipantScore> participants;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;  // sample standard deviation
  double mutual_agreement = 0.0;
  std::vector<PairAgreement> pairs;
  std::vector<QuestionScore> per_question;
};

// Every session must be complete.
absl::StatusOr<StudyResults> ScoreStudy(
    const std::vector<StudySession>& sessions, const StudyDefinition& study);

nlohmann::ordered_json ResultsToJson(const StudyResults& results);

}  // namespace nlicheck

#endif  // NLICHECK_STUDY_H_
