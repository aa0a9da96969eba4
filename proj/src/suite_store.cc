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

#include "nlicheck/suite_store.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "io_util.h"
#include "nlicheck/capability.h"
#include "nlohmann/json.hpp"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json ExampleToJson(const GeneratedExample& ex) {
  ordered_json j;
  j["example_id"] = ex.example_id;
  j["template_id"] = ex.template_id;
  j["capability"] = ex.capability.name;
  j["group"] = std::string(GroupName(ex.capability.group));
  j["premise"] = ex.premise;
  j["hypothesis"] = ex.hypothesis;
  j["gold"] = std::string(LabelName(ex.gold));
  j["gold_confidence"] = ex.gold_confidence;
  ordered_json binding = ordered_json::object();
  for (const auto& [label, surface] : ex.binding) binding[label] = surface;
  j["binding"] = std::move(binding);
  return j;
}

absl::StatusOr<GeneratedExample> ExampleFromJson(const nlohmann::json& j) {
  GeneratedExample ex;
  try {
    ex.example_id = j.at("example_id").get<std::string>();
    ex.template_id = j.at("template_id").get<std::string>();
    std::string cap = j.at("capability").get<std::string>();
    std::optional<Capability> capability =
        CapabilityRegistry::Default().Find(cap);
    if (!capability) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown capability '", cap, "'"));
    }
    std::string group = j.at("group").get<std::string>();
    if (GroupName(capability->group) != group) {
      return absl::InvalidArgumentError(absl::StrCat(
          "capability ", cap, " does not belong to group ", group));
    }
    ex.capability = *capability;
    ex.premise = j.at("premise").get<std::string>();
    ex.hypothesis = j.at("hypothesis").get<std::string>();
    std::string gold = j.at("gold").get<std::string>();
    std::optional<Label> label = ParseLabel(gold);
    if (!label) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown label '", gold, "'"));
    }
    ex.gold = *label;
    ex.gold_confidence = j.at("gold_confidence").get<double>();
    for (const auto& [k, v] : j.at("binding").items()) {
      ex.binding[k] = v.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(e.what());
  }
  return ex;
}

ordered_json MetadataToJson(const SuiteMetadata& meta) {
  ordered_json j;
  j["seed"] = meta.seed;
  j["corpus_hash"] = meta.corpus_hash;
  ordered_json report = ordered_json::array();
  for (const TemplateGenerationReport& r : meta.report) {
    ordered_json row;
    row["template_id"] = r.template_id;
    row["requested"] = r.requested;
    row["produced"] = r.produced;
    row["space"] = r.space;
    row["space_saturated"] = r.space_saturated;
    row["note"] = r.note;
    report.push_back(std::move(row));
  }
  j["report"] = std::move(report);
  return j;
}

absl::StatusOr<SuiteMetadata> MetadataFromJson(const nlohmann::json& j) {
  SuiteMetadata meta;
  try {
    meta.seed = j.at("seed").get<uint64_t>();
    meta.corpus_hash = j.at("corpus_hash").get<std::string>();
    for (const auto& row : j.at("report")) {
      TemplateGenerationReport r;
      r.template_id = row.at("template_id").get<std::string>();
      r.requested = row.at("requested").get<uint64_t>();
      r.produced = row.at("produced").get<uint64_t>();
      r.space = row.at("space").get<uint64_t>();
      r.space_saturated = row.at("space_saturated").get<bool>();
      r.note = row.at("note").get<std::string>();
      meta.report.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad suite metadata: ", e.what()));
  }
  return meta;
}

std::filesystem::path Sidecar(const std::filesystem::path& path) {
  std::filesystem::path out = path;
  out += ".meta.json";
  return out;
}

}  // namespace

std::string SuiteToJsonl(const SuiteDataset& suite) {
  std::string out;
  for (const GeneratedExample& ex : suite.examples) {
    absl::StrAppend(&out, ExampleToJson(ex).dump(), "\n");
  }
  return out;
}

absl::StatusOr<SuiteDataset> SuiteFromJsonl(std::string_view text) {
  SuiteDataset suite;
  std::set<std::string> ids;
  size_t line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": blank line"));
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": not a JSON object"));
    }
    absl::StatusOr<GeneratedExample> ex = ExampleFromJson(j);
    if (!ex.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": ", std::string(ex.status().message())));
    }
    if (!ids.insert(ex->example_id).second) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_no, ": duplicate example id ", ex->example_id));
    }
    suite.examples.push_back(*std::move(ex));
  }
  suite.RebuildIndex();
  return suite;
}

absl::Status SaveSuite(const SuiteDataset& suite,
                       const std::filesystem::path& path) {
  std::filesystem::path lock_path = path;
  lock_path += ".lock";
  absl::StatusOr<FileLock> lock = FileLock::Acquire(lock_path);
  if (!lock.ok()) return lock.status();
  if (absl::Status s = WriteFileAtomic(path, SuiteToJsonl(suite)); !s.ok()) {
    return s;
  }
  return WriteFileAtomic(Sidecar(path),
                         MetadataToJson(suite.metadata).dump(2) + "\n");
}

absl::StatusOr<SuiteDataset> LoadSuite(const std::filesystem::path& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<SuiteDataset> suite = SuiteFromJsonl(*text);
  if (!suite.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(
        path.string(), ": ", std::string(suite.status().message())));
  }
  std::error_code ec;
  if (std::filesystem::exists(Sidecar(path), ec)) {
    absl::StatusOr<std::string> meta_text = ReadFile(Sidecar(path));
    if (!meta_text.ok()) return meta_text.status();
    nlohmann::json j = nlohmann::json::parse(*meta_text, nullptr, false);
    if (j.is_discarded()) {
      return absl::InvalidArgumentError(
          absl::StrCat(Sidecar(path).string(), ": invalid JSON"));
    }
    absl::StatusOr<SuiteMetadata> meta = MetadataFromJson(j);
    if (!meta.ok()) return meta.status();
    suite->metadata = *std::move(meta);
  }
  return suite;
}

absl::StatusOr<AnnotationSheet> SampleForAnnotation(
    const SuiteDataset& suite, int per_template, uint64_t seed,
    std::vector<std::string> annotators) {
  if (per_template < 1) {
    return absl::InvalidArgumentError("per_template must be at least 1");
  }
  if (annotators.empty()) {
    return absl::InvalidArgumentError("at least one annotator is required");
  }
  std::set<std::string> unique(annotators.begin(), annotators.end());
  if (unique.size() != annotators.size()) {
    return absl::InvalidArgumentError("duplicate annotator id");
  }
  std::mt19937_64 rng(seed);
  std::vector<size_t> picked;
  for (const std::string& template_id : suite.template_order) {
    std::vector<size_t> positions = suite.template_index.at(template_id);
    size_t take = std::min<size_t>(per_template, positions.size());
    // Partial Fisher-Yates: the first `take` slots are a uniform sample.
    for (size_t i = 0; i < take; ++i) {
      size_t j = i + rng() % (positions.size() - i);
      std::swap(positions[i], positions[j]);
    }
    picked.insert(picked.end(), positions.begin(), positions.begin() + take);
  }
  SeededShuffle(picked, rng);
  AnnotationSheet sheet;
  sheet.annotators = std::move(annotators);
  for (size_t pos : picked) {
    const GeneratedExample& ex = suite.examples[pos];
    sheet.rows.push_back({ex.example_id, ex.premise, ex.hypothesis});
  }
  return sheet;
}

std::string SheetToCsv(const AnnotationSheet& sheet) {
  std::string out = "example_id,premise,hypothesis";
  for (const std::string& a : sheet.annotators) {
    absl::StrAppend(&out, ",", CsvEscape("label_" + a));
  }
  out += "\n";
  for (const AnnotationRow& row : sheet.rows) {
    absl::StrAppend(&out, CsvEscape(row.example_id), ",",
                    CsvEscape(row.premise), ",", CsvEscape(row.hypothesis));
    for (const std::string& a : sheet.annotators) {
      out += ",";
      auto per = sheet.labels.find(a);
      if (per == sheet.labels.end()) continue;
      auto it = per->second.find(row.example_id);
      if (it != per->second.end()) out += std::string(LabelName(it->second));
    }
    out += "\n";
  }
  return out;
}

absl::StatusOr<AnnotationSheet> SheetFromCsv(std::string_view csv) {
  absl::StatusOr<std::vector<std::vector<std::string>>> rows = ParseCsv(csv);
  if (!rows.ok()) return rows.status();
  if (rows->empty()) return absl::InvalidArgumentError("empty sheet");
  const std::vector<std::string>& header = rows->front();
  if (header.size() < 3 || header[0] != "example_id" ||
      header[1] != "premise" || header[2] != "hypothesis") {
    return absl::InvalidArgumentError(
        "header must start with example_id,premise,hypothesis");
  }
  AnnotationSheet sheet;
  for (size_t c = 3; c < header.size(); ++c) {
    if (header[c].rfind("label_", 0) != 0 || header[c].size() == 6) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad annotator column '", header[c], "'"));
    }
    std::string annotator = header[c].substr(6);
    if (std::find(sheet.annotators.begin(), sheet.annotators.end(),
                  annotator) != sheet.annotators.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate annotator column '", header[c], "'"));
    }
    sheet.annotators.push_back(annotator);
    sheet.labels[annotator];
  }
  std::set<std::string> seen;
  for (size_t r = 1; r < rows->size(); ++r) {
    const std::vector<std::string>& row = (*rows)[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "row ", r + 1, ": expected ", header.size(), " fields, got ",
          row.size()));
    }
    if (!seen.insert(row[0]).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", r + 1, ": duplicate example id ", row[0]));
    }
    sheet.rows.push_back({row[0], row[1], row[2]});
    for (size_t c = 3; c < row.size(); ++c) {
      if (row[c].empty()) continue;
      std::optional<Label> label = ParseLabel(row[c]);
      if (!label) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", r + 1, ": unknown label '", row[c], "'"));
      }
      sheet.labels[sheet.annotators[c - 3]][row[0]] = *label;
    }
  }
  return sheet;
}

absl::StatusOr<double> FleissKappa(const std::vector<std::vector<int>>& table,
                                   int raters) {
  if (raters < 2) return absl::InvalidArgumentError("need at least 2 raters");
  if (table.empty()) return absl::InvalidArgumentError("need at least 1 item");
  const size_t categories = table.front().size();
  std::vector<double> totals(categories, 0.0);
  double p_bar = 0.0;
  for (size_t i = 0; i < table.size(); ++i) {
    const std::vector<int>& row = table[i];
    if (row.size() != categories) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", i, " has ", row.size(), " categories"));
    }
    int64_t sum = 0;
    int64_t squares = 0;
    for (size_t j = 0; j < categories; ++j) {
      if (row[j] < 0) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", i, " has a negative count"));
      }
      sum += row[j];
      squares += static_cast<int64_t>(row[j]) * row[j];
      totals[j] += row[j];
    }
    if (sum != raters) {
      return absl::InvalidArgumentError(absl::StrCat(
          "row ", i, " sums to ", sum, ", expected ", raters));
    }
    p_bar += static_cast<double>(squares - raters) /
             (static_cast<double>(raters) * (raters - 1));
  }
  const double items = static_cast<double>(table.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double t : totals) {
    double p = t / (items * raters);
    p_e += p * p;
  }
  if (p_e >= 1.0) {
    if (p_bar >= 1.0) return 1.0;
    return absl::FailedPreconditionError(
        "kappa is undefined: expected agreement is 1 but observed is not");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

absl::StatusOr<AgreementReport> ImportAnnotations(const AnnotationSheet& sheet,
                                                  const SuiteDataset& suite) {
  SuiteDataset indexed = suite;
  indexed.RebuildIndex();
  for (const AnnotationRow& row : sheet.rows) {
    if (indexed.FindExample(row.example_id) == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("unknown example id ", row.example_id));
    }
  }
  for (const auto& [annotator, labels] : sheet.labels) {
    for (const auto& [id, label] : labels) {
      if (indexed.FindExample(id) == nullptr) {
        return absl::NotFoundError(absl::StrCat(
            "annotator ", annotator, " labelled unknown example id ", id));
      }
    }
  }
  AgreementReport report;
  std::vector<std::vector<int>> table;
  std::vector<std::string> template_order;
  std::map<std::string, std::array<int, 3>> votes;
  for (const AnnotationRow& row : sheet.rows) {
    const GeneratedExample* ex = indexed.FindExample(row.example_id);
    std::vector<int> counts(3, 0);
    int given = 0;
    for (const std::string& annotator : sheet.annotators) {
      auto per = sheet.labels.find(annotator);
      if (per == sheet.labels.end()) continue;
      auto it = per->second.find(row.example_id);
      if (it == per->second.end()) continue;
      ++counts[static_cast<int>(it->second)];
      ++given;
    }
    if (!votes.contains(ex->template_id)) {
      template_order.push_back(ex->template_id);
      votes[ex->template_id] = {0, 0, 0};
    }
    for (int c = 0; c < 3; ++c) votes[ex->template_id][c] += counts[c];
    if (given == static_cast<int>(sheet.annotators.size())) {
      table.push_back(std::move(counts));
    }
  }
  report.items = static_cast<int>(table.size());
  if (table.empty()) {
    return absl::FailedPreconditionError(
        "no row carries a label from every annotator");
  }
  absl::StatusOr<double> kappa =
      FleissKappa(table, static_cast<int>(sheet.annotators.size()));
  if (!kappa.ok()) return kappa.status();
  report.kappa = *kappa;

  for (const std::string& template_id : template_order) {
    const std::array<int, 3>& v = votes[template_id];
    const GeneratedExample& first =
        indexed.examples[indexed.template_index.at(template_id).front()];
    TemplateAgreement t;
    t.template_id = template_id;
    t.labels = v[0] + v[1] + v[2];
    t.gold = first.gold;
    for (Label label : kAllLabels) {
      if (2 * v[static_cast<int>(label)] > t.labels) t.majority = label;
    }
    t.ambiguous = !t.majority.has_value() || first.Ambiguous();
    if (!t.ambiguous && *t.majority != t.gold) {
      report.mismatches.push_back(template_id);
    }
    report.templates.push_back(std::move(t));
  }
  return report;
}

std::string AgreementReportToJson(const AgreementReport& report) {
  ordered_json j;
  j["kappa"] = report.kappa;
  j["items"] = report.items;
  ordered_json templates = ordered_json::array();
  for (const TemplateAgreement& t : report.templates) {
    ordered_json row;
    row["template_id"] = t.template_id;
    row["labels"] = t.labels;
    row["majority"] = t.majority ? ordered_json(std::string(LabelName(*t.majority)))
                                 : ordered_json(nullptr);
    row["gold"] = std::string(LabelName(t.gold));
    row["ambiguous"] = t.ambiguous;
    templates.push_back(std::move(row));
  }
  j["templates"] = std::move(templates);
  j["mismatches"] = report.mismatches;
  return j.dump(2) + "\n";
}

}  // namespace nlicheck
