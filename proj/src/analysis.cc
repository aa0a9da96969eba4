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

#include "nlicheck/analysis.h"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "nlicheck/ridge.h"
#include "nlohmann/json.hpp"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

// "NAME2" -> "NAME", "OBJ@i[3]" -> "OBJ".
std::string KeyOfLabel(std::string_view label) {
  size_t at = label.find('@');
  if (at != std::string_view::npos) label = label.substr(0, at);
  while (!label.empty() && label.back() >= '0' && label.back() <= '9') {
    label.remove_suffix(1);
  }
  return std::string(label);
}

// The lexicon entry bound to `label` in `ex`, if it is a word-list binding.
absl::StatusOr<std::optional<LexiconEntry>> EntryOf(
    const GeneratedExample& ex, const std::string& label,
    const LexiconStore* store) {
  if (ex.full_binding) {
    auto it = ex.full_binding->assignments.find(label);
    if (it == ex.full_binding->assignments.end()) return std::nullopt;
    if (const auto* entry = std::get_if<LexiconEntry>(&it->second)) {
      return std::optional<LexiconEntry>(*entry);
    }
    return std::nullopt;
  }
  auto surface = ex.binding.find(label);
  if (surface == ex.binding.end()) return std::nullopt;
  if (store == nullptr) {
    return absl::FailedPreconditionError(
        "attribute grouping of loaded suites needs the lexicon");
  }
  const std::string key = KeyOfLabel(label);
  if (!store->HasKey(key) || store->IsNumeric(key)) return std::nullopt;
  absl::StatusOr<std::vector<LexiconEntry>> entries = store->Lookup(key);
  if (!entries.ok()) return entries.status();
  for (LexiconEntry& entry : *entries) {
    if (entry.surface == surface->second) {
      return std::optional<LexiconEntry>(std::move(entry));
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view StatusName(TemplateStatus status) {
  switch (status) {
    case TemplateStatus::kPassed:
      return "passed";
    case TemplateStatus::kUnsure:
      return "unsure";
    case TemplateStatus::kFailed:
      return "failed";
    case TemplateStatus::kAmbiguousExcluded:
      return "ambiguous-excluded";
  }
  return "unsure";
}

TemplateStatus ClassifyTemplate(double accuracy) {
  if (accuracy > kPassThreshold) return TemplateStatus::kPassed;
  if (accuracy < kFailThreshold) return TemplateStatus::kFailed;
  return TemplateStatus::kUnsure;
}

absl::StatusOr<TemplateAccuracy> ComputeTemplateAccuracy(
    const SuiteDataset& suite, const RecordIndex& records,
    const std::string& template_id) {
  auto it = suite.template_index.find(template_id);
  if (it == suite.template_index.end()) {
    return absl::NotFoundError(
        absl::StrCat("template ", template_id, " is not in the suite"));
  }
  TemplateAccuracy out;
  int64_t correct = 0;
  for (size_t pos : it->second) {
    const GeneratedExample& ex = suite.examples[pos];
    const PredictionRecord* record = records.Find(ex.example_id);
    if (record == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("no prediction for example ", ex.example_id));
    }
    if (record->predicted == ex.gold) ++correct;
    ++out.n;
  }
  out.accuracy = out.n == 0 ? 0.0 : static_cast<double>(correct) / out.n;
  return out;
}

int HistogramBin(double accuracy) {
  if (accuracy < 0.2) return 0;
  if (accuracy < 0.4) return 1;
  if (accuracy < 0.6) return 2;
  if (accuracy < 0.8) return 3;
  return 4;
}

std::array<int, 5> Histogram5(const std::vector<TemplateVerdict>& verdicts) {
  std::array<int, 5> bins = {0, 0, 0, 0, 0};
  for (const TemplateVerdict& v : verdicts) {
    if (v.status == TemplateStatus::kAmbiguousExcluded) continue;
    ++bins[HistogramBin(v.accuracy)];
  }
  return bins;
}

const CapabilityScore* CapabilityReport::Find(
    std::string_view capability) const {
  for (const CapabilityScore& score : capabilities) {
    if (score.capability.name == capability) return &score;
  }
  return nullptr;
}

absl::StatusOr<CapabilityReport> BuildCapabilityReport(
    const SuiteDataset& suite, const std::vector<PredictionRecord>& records,
    const CapabilityRegistry& registry) {
  CapabilityReport report;
  std::set<std::string> models;
  for (const PredictionRecord& r : records) models.insert(r.model_id);
  if (models.size() > 1) {
    return absl::InvalidArgumentError(
        "records span several models; score each model separately");
  }
  if (!models.empty()) report.model_id = *models.begin();
  const RecordIndex index(records);

  struct Tally {
    int64_t correct = 0;
    int64_t examples = 0;
    double accuracy_sum = 0.0;
    int templates = 0;
  };
  std::map<std::string, Tally> tallies;
  int64_t correct = 0;
  for (const std::string& template_id : suite.template_order) {
    absl::StatusOr<TemplateAccuracy> acc =
        ComputeTemplateAccuracy(suite, index, template_id);
    if (!acc.ok()) return acc.status();
    const GeneratedExample& first =
        suite.examples[suite.template_index.at(template_id).front()];
    if (!registry.Find(first.capability.name)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "template ", template_id, " has unregistered capability ",
          first.capability.name));
    }
    TemplateVerdict verdict;
    verdict.template_id = template_id;
    verdict.capability = first.capability;
    verdict.accuracy = acc->accuracy;
    verdict.n = acc->n;
    verdict.status = first.Ambiguous() ? TemplateStatus::kAmbiguousExcluded
                                       : ClassifyTemplate(acc->accuracy);
    // Exact integer count, so micro averages are not rebuilt from rounded
    // ratios.
    int64_t template_correct = 0;
    for (size_t pos : suite.template_index.at(template_id)) {
      const GeneratedExample& ex = suite.examples[pos];
      if (index.Find(ex.example_id)->predicted == ex.gold) ++template_correct;
    }
    Tally& tally = tallies[first.capability.name];
    tally.correct += template_correct;
    tally.examples += acc->n;
    tally.accuracy_sum += acc->accuracy;
    ++tally.templates;
    correct += template_correct;
    report.examples += acc->n;
    report.verdicts.push_back(std::move(verdict));
  }
  for (const Capability& capability : registry.All()) {
    auto it = tallies.find(capability.name);
    if (it == tallies.end()) continue;
    CapabilityScore score;
    score.capability = capability;
    score.examples = it->second.examples;
    score.templates = it->second.templates;
    score.micro = it->second.examples == 0
                      ? 0.0
                      : static_cast<double>(it->second.correct) /
                            it->second.examples;
    score.macro = it->second.accuracy_sum / it->second.templates;
    report.capabilities.push_back(std::move(score));
  }
  report.histogram = Histogram5(report.verdicts);
  report.overall = report.examples == 0
                       ? 0.0
                       : static_cast<double>(correct) / report.examples;
  return report;
}

std::string CapabilityReportToJson(const CapabilityReport& report) {
  ordered_json j;
  j["model_id"] = report.model_id;
  j["overall"] = report.overall;
  j["examples"] = report.examples;
  j["histogram"] = report.histogram;
  ordered_json caps = ordered_json::array();
  for (const CapabilityScore& score : report.capabilities) {
    ordered_json c;
    c["capability"] = score.capability.name;
    c["group"] = std::string(GroupName(score.capability.group));
    c["micro"] = score.micro;
    c["macro"] = score.macro;
    c["examples"] = score.examples;
    c["templates"] = score.templates;
    caps.push_back(std::move(c));
  }
  j["capabilities"] = std::move(caps);
  ordered_json verdicts = ordered_json::array();
  for (const TemplateVerdict& v : report.verdicts) {
    ordered_json row;
    row["template_id"] = v.template_id;
    row["capability"] = v.capability.name;
    row["accuracy"] = v.accuracy;
    row["n"] = v.n;
    row["status"] = std::string(StatusName(v.status));
    verdicts.push_back(std::move(row));
  }
  j["verdicts"] = std::move(verdicts);
  return j.dump(2) + "\n";
}

absl::StatusOr<std::vector<SliceRow>> SliceByBinding(
    const SuiteDataset& suite, const std::vector<PredictionRecord>& records,
    const std::string& template_id, const std::string& key,
    const SliceOptions& options, const LexiconStore* store) {
  auto positions = suite.template_index.find(template_id);
  if (positions == suite.template_index.end()) {
    return absl::NotFoundError(
        absl::StrCat("template ", template_id, " is not in the suite"));
  }
  std::string attr_label;
  std::string attr_name = options.group_by_attribute;
  if (size_t dot = attr_name.find('.'); dot != std::string::npos) {
    attr_label = attr_name.substr(0, dot);
    attr_name = attr_name.substr(dot + 1);
  }
  const RecordIndex index(records);
  std::map<std::pair<std::string, std::string>, std::pair<int64_t, int64_t>>
      cells;  // (value, attribute) -> (correct, n)
  for (size_t pos : positions->second) {
    const GeneratedExample& ex = suite.examples[pos];
    auto value = ex.binding.find(key);
    if (value == ex.binding.end()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "key ", key, " is not bound in example ", ex.example_id,
          " of template ", template_id));
    }
    const PredictionRecord* record = index.Find(ex.example_id);
    if (record == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("no prediction for example ", ex.example_id));
    }
    std::string attribute;
    if (!attr_name.empty()) {
      std::vector<std::string> candidates;
      if (!attr_label.empty()) {
        candidates.push_back(attr_label);
      } else {
        candidates.push_back(key);
        for (const auto& [label, surface] : ex.binding) {
          if (label != key) candidates.push_back(label);
        }
      }
      bool found = false;
      for (const std::string& label : candidates) {
        absl::StatusOr<std::optional<LexiconEntry>> entry =
            EntryOf(ex, label, store);
        if (!entry.ok()) return entry.status();
        if (*entry && !(*entry)->Attribute(attr_name).empty()) {
          attribute = std::string((*entry)->Attribute(attr_name));
          found = true;
          break;
        }
      }
      if (!found) attribute = "none";
    }
    auto& cell = cells[{value->second, attribute}];
    if (record->predicted == ex.gold) ++cell.first;
    ++cell.second;
  }
  std::vector<SliceRow> rows;
  for (const auto& [k, v] : cells) {
    SliceRow row;
    row.value = k.first;
    row.attribute = k.second;
    row.n = v.second;
    row.accuracy = static_cast<double>(v.first) / v.second;
    row.low_support = row.n < options.min_support;
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SliceRow& a, const SliceRow& b) {
                     return a.accuracy < b.accuracy;
                   });
  return rows;
}

absl::StatusOr<FeatureMatrix> BuildFeatureMatrix(
    const std::vector<TemplateAst>& templates, const SuiteDataset& suite,
    const std::vector<PredictionRecord>& records, int top_k,
    bool per_example) {
  if (top_k < 0) return absl::InvalidArgumentError("top_k must be >= 0");
  const RecordIndex index(records);
  std::vector<const TemplateAst*> rows;
  for (const TemplateAst& ast : templates) {
    if (ast.ambiguous || !suite.template_index.contains(ast.id)) continue;
    rows.push_back(&ast);
  }
  if (rows.empty()) {
    return absl::FailedPreconditionError(
        "no non-ambiguous template has examples in the suite");
  }

  std::set<std::string> placeholder_set;
  std::map<std::string, int64_t> word_counts;
  std::vector<std::vector<std::string>> placeholders(rows.size());
  std::vector<std::set<std::string>> words(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    placeholders[r] = PlaceholderFeatures(*rows[r]);
    placeholder_set.insert(placeholders[r].begin(), placeholders[r].end());
    for (const std::string& w : LiteralWords(*rows[r])) {
      ++word_counts[w];
      words[r].insert(w);
    }
  }
  std::vector<std::pair<std::string, int64_t>> ranked(word_counts.begin(),
                                                      word_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  if (ranked.size() > static_cast<size_t>(top_k)) ranked.resize(top_k);

  FeatureMatrix out;
  std::map<std::string, int> column;
  for (const std::string& name : placeholder_set) {
    column[name] = static_cast<int>(out.names.size());
    out.names.push_back(name);
  }
  out.placeholder_features = static_cast<int>(out.names.size());
  std::map<std::string, int> word_column;
  for (const auto& [w, count] : ranked) {
    word_column[w] = static_cast<int>(out.names.size());
    out.names.push_back(w);
  }
  out.word_features = static_cast<int>(ranked.size());
  const int label_base = static_cast<int>(out.names.size());
  for (Label label : kAllLabels) {
    out.names.push_back(absl::StrCat("label:", std::string(LabelName(label))));
  }

  std::vector<Eigen::RowVectorXd> feature_rows;
  std::vector<double> targets;
  for (size_t r = 0; r < rows.size(); ++r) {
    Eigen::RowVectorXd f = Eigen::RowVectorXd::Zero(out.names.size());
    for (const std::string& p : placeholders[r]) f[column[p]] = 1.0;
    for (const std::string& w : words[r]) {
      if (auto it = word_column.find(w); it != word_column.end()) {
        f[it->second] = 1.0;
      }
    }
    f[label_base + static_cast<int>(rows[r]->Gold())] = 1.0;
    if (per_example) {
      for (size_t pos : suite.template_index.at(rows[r]->id)) {
        const GeneratedExample& ex = suite.examples[pos];
        const PredictionRecord* record = index.Find(ex.example_id);
        if (record == nullptr) {
          return absl::NotFoundError(
              absl::StrCat("no prediction for example ", ex.example_id));
        }
        feature_rows.push_back(f);
        targets.push_back(record->predicted == ex.gold ? 1.0 : 0.0);
        out.row_ids.push_back(ex.example_id);
      }
    } else {
      absl::StatusOr<TemplateAccuracy> acc =
          ComputeTemplateAccuracy(suite, index, rows[r]->id);
      if (!acc.ok()) return acc.status();
      feature_rows.push_back(f);
      targets.push_back(acc->accuracy);
      out.row_ids.push_back(rows[r]->id);
    }
  }
  out.target = per_example ? "example correctness" : "template accuracy";
  out.x.resize(static_cast<Eigen::Index>(feature_rows.size()),
               static_cast<Eigen::Index>(out.names.size()));
  out.y.resize(static_cast<Eigen::Index>(targets.size()));
  for (size_t i = 0; i < feature_rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = feature_rows[i];
    out.y[static_cast<Eigen::Index>(i)] = targets[i];
  }
  return out;
}

absl::StatusOr<ImportanceResult> FitRidge(const FeatureMatrix& features,
                                          double lambda) {
  absl::StatusOr<RidgeSolution> solution =
      SolveRidge(features.x, features.y, lambda, /*fit_intercept=*/true);
  if (!solution.ok()) return solution.status();
  ImportanceResult result;
  result.names = features.names;
  result.coefficients.assign(solution->coefficients.data(),
                             solution->coefficients.data() +
                                 solution->coefficients.size());
  result.intercept = solution->intercept;
  result.lambda = lambda;
  result.target = features.target;
  return result;
}

std::string ImportanceToJson(const ImportanceResult& result) {
  ordered_json j;
  j["target"] = result.target;
  j["lambda"] = result.lambda;
  j["intercept"] = result.intercept;
  ordered_json features = ordered_json::array();
  for (size_t i = 0; i < result.names.size(); ++i) {
    ordered_json f;
    f["name"] = result.names[i];
    f["coefficient"] = result.coefficients[i];
    features.push_back(std::move(f));
  }
  j["features"] = std::move(features);
  return j.dump(2) + "\n";
}

}  // namespace nlicheck
