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

// Scoring a suite against one model's predictions.

#ifndef NLICHECK_ANALYSIS_H_
#define NLICHECK_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/statusor.h"
#include "nlicheck/capability.h"
#include "nlicheck/lexicon.h"
#include "nlicheck/predictions.h"
#include "nlicheck/suite.h"
#include "nlicheck/template_ast.h"

namespace nlicheck {

// Above kPassThreshold passes, below kFailThreshold fails; both boundaries
// are unsure.
inline constexpr double kPassThreshold = 0.80;
inline constexpr double kFailThreshold = 0.20;

enum class TemplateStatus { kPassed, kUnsure, kFailed, kAmbiguousExcluded };

std::string_view StatusName(TemplateStatus status);

TemplateStatus ClassifyTemplate(double accuracy);

struct TemplateAccuracy {
  double accuracy = 0.0;
  int64_t n = 0;
};

absl::StatusOr<TemplateAccuracy> ComputeTemplateAccuracy(
    const SuiteDataset& suite, const RecordIndex& records,
    const std::string& template_id);

struct TemplateVerdict {
  std::string template_id;
  Capability capability;
  double accuracy = 0.0;
  int64_t n = 0;
  TemplateStatus status = TemplateStatus::kUnsure;
};

// Bins [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1].
int HistogramBin(double accuracy);
// Ambiguous-excluded verdicts are not counted.
std::array<int, 5> Histogram5(const std::vector<TemplateVerdict>& verdicts);

struct CapabilityScore {
  Capability capability;
  double micro = 0.0;  // example-weighted
  double macro = 0.0;  // mean of template accuracies
  int64_t examples = 0;
  int templates = 0;
};

struct CapabilityReport {
  std::string model_id;
  std::vector<CapabilityScore> capabilities;  // registry order, present only
  std::vector<TemplateVerdict> verdicts;       // suite template order
  std::array<int, 5> histogram = {0, 0, 0, 0, 0};
  double overall = 0.0;  // micro over all examples
  int64_t examples = 0;

  const CapabilityScore* Find(std::string_view capability) const;
};

// Requires a record for every suite example. Ambiguous templates count toward
// accuracies (scored against their argmax label) but get no verdict bucket.
absl::StatusOr<CapabilityReport> BuildCapabilityReport(
    const SuiteDataset& suite, const std::vector<PredictionRecord>& records,
    const CapabilityRegistry& registry = CapabilityRegistry::Default());

std::string CapabilityReportToJson(const CapabilityReport& report);

struct SliceRow {
  std::string value;
  std::string attribute;  // empty when not grouped by attribute
  double accuracy = 0.0;
  int64_t n = 0;
  bool low_support = false;
};

struct SliceOptions {
  // "gender" reads the attribute from the sliced entry, falling back to the
  // first other binding (in label order) whose entry carries it;
  // "NAME2.gender" names the binding explicitly.
  std::string group_by_attribute;
  int64_t min_support = 10;
};

// Accuracy per bound value of `key` (a binding label such as "PROFESSION" or
// "NAME2"), sorted by accuracy ascending. Attribute grouping needs `store`.
absl::StatusOr<std::vector<SliceRow>> SliceByBinding(
    const SuiteDataset& suite, const std::vector<PredictionRecord>& records,
    const std::string& template_id, const std::string& key,
    const SliceOptions& options = {}, const LexiconStore* store = nullptr);

struct FeatureMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<std::string> row_ids;  // template ids (or example ids)
  std::string target;  // "template accuracy" or "example correctness"
  int placeholder_features = 0;
  int word_features = 0;
};

// One row per non-ambiguous template: placeholder indicators, indicators of
// the top_k most frequent literal words of the template patterns, and a
// one-hot gold label; y is the template accuracy. With per_example, one row
// per example and y is 0/1 correctness.
absl::StatusOr<FeatureMatrix> BuildFeatureMatrix(
    const std::vector<TemplateAst>& templates, const SuiteDataset& suite,
    const std::vector<PredictionRecord>& records, int top_k = 20,
    bool per_example = false);

inline constexpr double kDefaultRidgeLambda = 1e-3;

struct ImportanceResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  std::string target;
};

absl::StatusOr<ImportanceResult> FitRidge(const FeatureMatrix& features,
                                          double lambda = kDefaultRidgeLambda);

std::string ImportanceToJson(const ImportanceResult& result);

}  // namespace nlicheck

#endif  // NLICHECK_ANALYSIS_H_
