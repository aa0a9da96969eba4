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

#ifndef NLICHECK_SUITE_STORE_H_
#define NLICHECK_SUITE_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlicheck/labels.h"
#include "nlicheck/suite.h"

namespace nlicheck {

// JSON-lines, one example per line:
// {example_id, template_id, capability, group, premise, hypothesis, gold,
//  gold_confidence, binding}
std::string SuiteToJsonl(const SuiteDataset& suite);
absl::StatusOr<SuiteDataset> SuiteFromJsonl(std::string_view text);

// Writes `path` and `path`.meta.json (seed, corpus hash, generation report).
// Holds `path`.lock for the duration; fails if another writer holds it.
absl::Status SaveSuite(const SuiteDataset& suite,
                       const std::filesystem::path& path);
// The metadata sidecar is optional.
absl::StatusOr<SuiteDataset> LoadSuite(const std::filesystem::path& path);

struct AnnotationRow {
  std::string example_id;
  std::string premise;
  std::string hypothesis;
};

struct AnnotationSheet {
  std::vector<AnnotationRow> rows;
  std::vector<std::string> annotators;
  // annotator -> example id -> label
  std::map<std::string, std::map<std::string, Label>> labels;
};

absl::StatusOr<AnnotationSheet> SampleForAnnotation(
    const SuiteDataset& suite, int per_template, uint64_t seed,
    std::vector<std::string> annotators = {"a1", "a2"});

// CSV with header example_id,premise,hypothesis,label_<annotator>...
std::string SheetToCsv(const AnnotationSheet& sheet);
absl::StatusOr<AnnotationSheet> SheetFromCsv(std::string_view csv);

// Fleiss' kappa over an item x category count table where every row sums to
// `raters`. When expected agreement is 1 the result is 1 if observed
// agreement is also 1, otherwise an error.
absl::StatusOr<double> FleissKappa(
    const std::vector<std::vector<int>>& table, int raters);

struct TemplateAgreement {
  std::string template_id;
  int labels = 0;
  std::optional<Label> majority;  // nullopt: no strict majority
  bool ambiguous = false;         // no majority, or template itself ambiguous
  Label gold = Label::kEntailment;
};

struct AgreementReport {
  double kappa = 0.0;
  int items = 0;  // rows labelled by every annotator
  std::vector<TemplateAgreement> templates;
  std::vector<std::string> mismatches;  // template ids
};

absl::StatusOr<AgreementReport> ImportAnnotations(const AnnotationSheet& sheet,
                                                  const SuiteDataset& suite);

std::string AgreementReportToJson(const AgreementReport& report);

}  // namespace nlicheck

#endif  // NLICHECK_SUITE_STORE_H_
