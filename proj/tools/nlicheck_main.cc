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

// Command-line front end: generate, evaluate, analyze, annotate, study.

#include <pthread.h>
#include <signal.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "nlicheck/analysis.h"
#include "nlicheck/explainer.h"
#include "nlicheck/generator.h"
#include "nlicheck/lexicon.h"
#include "nlicheck/predictions.h"
#include "nlicheck/report.h"
#include "nlicheck/study.h"
#include "nlicheck/study_service.h"
#include "nlicheck/suite_store.h"
#include "nlicheck/template_ast.h"
#include "nlohmann/json.hpp"

namespace nlicheck {
namespace {

namespace fs = std::filesystem;

#ifndef NLICHECK_DATA_DIR
#define NLICHECK_DATA_DIR "data"
#endif

std::string DefaultTemplates() {
  return (fs::path(NLICHECK_DATA_DIR) / "templates").string();
}
std::string DefaultLexicons() {
  return (fs::path(NLICHECK_DATA_DIR) / "lexicons").string();
}

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status.ToString() << "\n";
  return 1;
}

absl::StatusOr<std::vector<TemplateAst>> LoadTemplates(
    const std::string& path) {
  absl::StatusOr<std::vector<TemplateRecord>> records =
      LoadTemplateCorpus(path);
  if (!records.ok()) return records.status();
  std::vector<TemplateAst> out;
  out.reserve(records->size());
  for (TemplateRecord& r : *records) out.push_back(std::move(r.ast));
  return out;
}

absl::Status WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

// Suite plus the records of one or more models for it.
struct Evaluated {
  SuiteDataset suite;
  std::vector<PredictionRecord> records;
};

absl::StatusOr<Evaluated> LoadEvaluated(const std::string& suite_path,
                                        const std::string& predictions_path) {
  Evaluated out;
  absl::StatusOr<SuiteDataset> suite = LoadSuite(suite_path);
  if (!suite.ok()) return suite.status();
  out.suite = *std::move(suite);
  absl::StatusOr<std::vector<PredictionRecord>> records =
      FetchPredictionsFromFile(out.suite, predictions_path);
  if (!records.ok()) return records.status();
  out.records = *std::move(records);
  return out;
}

// Picks one model's records; `model` may be empty when there is only one.
absl::StatusOr<std::vector<PredictionRecord>> SelectModel(
    const std::vector<PredictionRecord>& records, const std::string& model) {
  std::map<std::string, std::vector<PredictionRecord>> groups =
      GroupByModel(records);
  if (groups.empty()) return absl::InvalidArgumentError("no predictions");
  if (model.empty()) {
    if (groups.size() > 1) {
      return absl::InvalidArgumentError(
          "predictions cover several models; pass --model");
    }
    return groups.begin()->second;
  }
  auto it = groups.find(model);
  if (it == groups.end()) {
    return absl::NotFoundError(absl::StrCat("no predictions for model ", model));
  }
  return it->second;
}

// ---- generate ----

struct GenerateArgs {
  std::string templates = DefaultTemplates();
  std::string lexicons = DefaultLexicons();
  uint64_t seed = 0;
  std::string out;
  uint64_t per_template = 1000;
  uint64_t knowledge_per_template = 100;
  int threads = 0;
};

int RunGenerate(const GenerateArgs& args) {
  absl::StatusOr<LexiconStore> store = LoadLexicons(args.lexicons);
  if (!store.ok()) return Fail(store.status());
  absl::StatusOr<std::vector<TemplateAst>> templates =
      LoadTemplates(args.templates);
  if (!templates.ok()) return Fail(templates.status());
  GenerationOptions options;
  options.seed = args.seed;
  options.default_target = args.per_template;
  options.knowledge_target = args.knowledge_per_template;
  options.threads = args.threads;
  absl::StatusOr<SuiteDataset> suite = GenerateSuite(*templates, *store, options);
  if (!suite.ok()) return Fail(suite.status());
  if (absl::Status s = SaveSuite(*suite, args.out); !s.ok()) return Fail(s);
  for (const TemplateGenerationReport& r : suite->metadata.report) {
    if (!r.note.empty()) {
      std::cerr << "note: " << r.template_id << ": " << r.note << "\n";
    }
  }
  std::cout << "wrote " << suite->examples.size() << " examples from "
            << suite->template_order.size() << " templates to " << args.out
            << "\n";
  return 0;
}

// ---- check ----

int RunCheck(const std::string& templates_path,
             const std::string& lexicons_path) {
  absl::StatusOr<LexiconStore> store = LoadLexicons(lexicons_path);
  if (!store.ok()) return Fail(store.status());
  absl::StatusOr<std::vector<TemplateRecord>> records =
      LoadTemplateCorpus(templates_path);
  if (!records.ok()) return Fail(records.status());
  int problems = 0;
  for (const TemplateRecord& r : *records) {
    for (const Diagnostic& d : Validate(r.ast, *store)) {
      ++problems;
      std::cout << r.file << ":" << r.line << ": " << r.ast.id << ": "
                << d.message << "\n";
    }
  }
  std::cout << records->size() << " templates, " << problems
            << " diagnostics\n";
  return problems == 0 ? 0 : 1;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string suite;
  std::string endpoint;
  std::string predictions;
  std::string cache = ".nlicheck-cache";
  std::string out;
  std::string report;
  bool embeddings = false;
  int concurrency = 8;
};

int RunEvaluate(const EvaluateArgs& args) {
  absl::StatusOr<SuiteDataset> suite = LoadSuite(args.suite);
  if (!suite.ok()) return Fail(suite.status());
  absl::StatusOr<std::vector<PredictionRecord>> records;
  if (!args.endpoint.empty()) {
    HttpPredictorOptions options;
    options.concurrency = args.concurrency;
    absl::StatusOr<std::unique_ptr<HttpPredictor>> predictor =
        HttpPredictor::Connect(args.endpoint, options);
    if (!predictor.ok()) return Fail(predictor.status());
    records = FetchPredictions(*suite, **predictor, args.cache,
                               args.embeddings, args.endpoint);
  } else {
    records = FetchPredictionsFromFile(*suite, args.predictions);
  }
  if (!records.ok()) return Fail(records.status());
  if (!args.out.empty()) {
    if (absl::Status s = WritePredictionsFile(*records, args.out); !s.ok()) {
      return Fail(s);
    }
  }
  std::vector<CapabilityReport> reports;
  for (const auto& [model, group] : GroupByModel(*records)) {
    absl::StatusOr<CapabilityReport> report =
        BuildCapabilityReport(*suite, group);
    if (!report.ok()) return Fail(report.status());
    std::cout << model << ": overall " << absl::StrFormat("%.2f", report->overall * 100)
              << "% over " << report->examples << " examples; templates "
              << report->histogram[4] << " in top bin, "
              << report->histogram[0] << " in bottom bin\n";
    reports.push_back(*std::move(report));
  }
  if (!args.report.empty()) {
    if (absl::Status s = WriteReportDirectory(args.report, reports, nullptr, {});
        !s.ok()) {
      return Fail(s);
    }
  }
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string suite;
  std::string predictions;
  std::string report;
  std::vector<std::string> slices;
  bool importance = false;
  std::string model;
  std::string templates = DefaultTemplates();
  std::string lexicons = DefaultLexicons();
  double lambda = kDefaultRidgeLambda;
  int top_k = 20;
  bool per_example = false;
  int64_t min_support = 10;
};

int RunAnalyze(const AnalyzeArgs& args) {
  absl::StatusOr<Evaluated> data = LoadEvaluated(args.suite, args.predictions);
  if (!data.ok()) return Fail(data.status());
  std::vector<CapabilityReport> reports;
  for (const auto& [model, group] : GroupByModel(data->records)) {
    absl::StatusOr<CapabilityReport> report =
        BuildCapabilityReport(data->suite, group);
    if (!report.ok()) return Fail(report.status());
    reports.push_back(*std::move(report));
  }

  std::optional<std::vector<PredictionRecord>> focus;
  auto focus_records = [&]() -> absl::StatusOr<std::vector<PredictionRecord>> {
    if (!focus.has_value()) {
      absl::StatusOr<std::vector<PredictionRecord>> selected =
          SelectModel(data->records, args.model);
      if (!selected.ok()) return selected.status();
      focus = *std::move(selected);
    }
    return *focus;
  };

  std::optional<ImportanceResult> importance;
  if (args.importance) {
    absl::StatusOr<std::vector<TemplateAst>> templates =
        LoadTemplates(args.templates);
    if (!templates.ok()) return Fail(templates.status());
    if (!data->suite.metadata.corpus_hash.empty() &&
        CorpusHash(*templates) != data->suite.metadata.corpus_hash) {
      std::cerr << "warning: template corpus differs from the one the suite "
                   "was generated from\n";
    }
    absl::StatusOr<std::vector<PredictionRecord>> records = focus_records();
    if (!records.ok()) return Fail(records.status());
    absl::StatusOr<FeatureMatrix> features = BuildFeatureMatrix(
        *templates, data->suite, *records, args.top_k, args.per_example);
    if (!features.ok()) return Fail(features.status());
    absl::StatusOr<ImportanceResult> fit = FitRidge(*features, args.lambda);
    if (!fit.ok()) return Fail(fit.status());
    importance = *std::move(fit);
  }

  std::vector<NamedSlice> slices;
  std::optional<LexiconStore> store;
  for (const std::string& spec : args.slices) {
    std::vector<std::string> parts = absl::StrSplit(spec, ':');
    if (parts.size() < 2 || parts.size() > 3) {
      return Fail(absl::InvalidArgumentError(
          absl::StrCat("--slice expects TEMPLATE:KEY[:ATTR], got ", spec)));
    }
    SliceOptions options;
    options.min_support = args.min_support;
    if (parts.size() == 3) options.group_by_attribute = parts[2];
    if (!options.group_by_attribute.empty() && !store.has_value()) {
      absl::StatusOr<LexiconStore> loaded = LoadLexicons(args.lexicons);
      if (!loaded.ok()) return Fail(loaded.status());
      store = *std::move(loaded);
    }
    absl::StatusOr<std::vector<PredictionRecord>> records = focus_records();
    if (!records.ok()) return Fail(records.status());
    absl::StatusOr<std::vector<SliceRow>> rows =
        SliceByBinding(data->suite, *records, parts[0], parts[1], options,
                       store.has_value() ? &*store : nullptr);
    if (!rows.ok()) return Fail(rows.status());
    slices.push_back({spec, *std::move(rows)});
  }

  if (absl::Status s = WriteReportDirectory(
          args.report, reports, importance ? &*importance : nullptr, slices);
      !s.ok()) {
    return Fail(s);
  }
  for (const CapabilityReport& r : reports) {
    std::cout << r.model_id << ": overall "
              << absl::StrFormat("%.2f", r.overall * 100) << "%\n";
  }
  std::cout << "report written to " << args.report << "\n";
  return 0;
}

// ---- annotate ----

struct AnnotateExportArgs {
  std::string suite;
  std::string out;
  int per_template = 5;
  uint64_t seed = 0;
  std::vector<std::string> annotators = {"a1", "a2"};
};

int RunAnnotateExport(const AnnotateExportArgs& args) {
  absl::StatusOr<SuiteDataset> suite = LoadSuite(args.suite);
  if (!suite.ok()) return Fail(suite.status());
  absl::StatusOr<AnnotationSheet> sheet = SampleForAnnotation(
      *suite, args.per_template, args.seed, args.annotators);
  if (!sheet.ok()) return Fail(sheet.status());
  if (absl::Status s = WriteText(args.out, SheetToCsv(*sheet)); !s.ok()) {
    return Fail(s);
  }
  std::cout << "wrote " << sheet->rows.size() << " rows to " << args.out
            << "\n";
  return 0;
}

int RunAnnotateImport(const std::string& suite_path, const std::string& csv,
                      const std::string& out) {
  absl::StatusOr<SuiteDataset> suite = LoadSuite(suite_path);
  if (!suite.ok()) return Fail(suite.status());
  std::ifstream in(csv, std::ios::binary);
  if (!in) return Fail(absl::NotFoundError(absl::StrCat("cannot read ", csv)));
  std::stringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<AnnotationSheet> sheet = SheetFromCsv(buffer.str());
  if (!sheet.ok()) return Fail(sheet.status());
  absl::StatusOr<AgreementReport> report = ImportAnnotations(*sheet, *suite);
  if (!report.ok()) return Fail(report.status());
  const std::string json = AgreementReportToJson(*report);
  if (out.empty()) {
    std::cout << json << "\n";
  } else if (absl::Status s = WriteText(out, json + "\n"); !s.ok()) {
    return Fail(s);
  }
  std::cerr << "kappa " << absl::StrFormat("%.4f", report->kappa) << " over "
            << report->items << " items; " << report->mismatches.size()
            << " gold mismatches\n";
  return 0;
}

// ---- study ----

struct StudyBuildArgs {
  std::string suite;
  std::string predictions;
  std::string endpoint;
  std::string cache = ".nlicheck-cache";
  std::string model;
  std::string pool_file;
  std::string pool_predictions;
  std::string pool_id = "external";
  std::string study_id = "study";
  size_t templates = 25;
  size_t per_template = 5;
  uint64_t seed = 0;
  std::vector<std::string> template_ids;
  size_t neighbors = 5;
  int lime_samples = 500;
  std::string out;
};

int RunStudyBuild(const StudyBuildArgs& args) {
  absl::StatusOr<SuiteDataset> suite = LoadSuite(args.suite);
  if (!suite.ok()) return Fail(suite.status());
  absl::StatusOr<std::unique_ptr<HttpPredictor>> predictor =
      HttpPredictor::Connect(args.endpoint);
  if (!predictor.ok()) return Fail(predictor.status());
  absl::StatusOr<std::vector<PredictionRecord>> records;
  if (!args.predictions.empty()) {
    absl::StatusOr<std::vector<PredictionRecord>> all =
        FetchPredictionsFromFile(*suite, args.predictions);
    if (!all.ok()) return Fail(all.status());
    records = SelectModel(*all, args.model.empty() ? (*predictor)->model_id()
                                                   : args.model);
  } else {
    records = FetchPredictions(*suite, **predictor, args.cache,
                               /*want_embeddings=*/true, args.endpoint);
  }
  if (!records.ok()) return Fail(records.status());
  absl::StatusOr<CapabilityReport> report =
      BuildCapabilityReport(*suite, *records);
  if (!report.ok()) return Fail(report.status());

  absl::StatusOr<ExamplePool> pool;
  if (args.pool_file.empty()) {
    pool = ExamplePool::FromSuite(*suite, *records);
  } else {
    pool = LoadExternalPool(args.pool_id, args.pool_file,
                            args.pool_predictions);
  }
  if (!pool.ok()) return Fail(pool.status());

  StudyBuildOptions options;
  options.study_id = args.study_id;
  options.templates = args.templates;
  options.questions_per_template = args.per_template;
  options.seed = args.seed;
  options.template_ids = args.template_ids;
  options.panel.k = args.neighbors;
  options.panel.lime.samples = args.lime_samples;
  absl::StatusOr<StudyDefinition> study =
      BuildStudy(*report, *suite, *records, *pool, **predictor, options);
  if (!study.ok()) return Fail(study.status());
  if (absl::Status s = WriteText(args.out, StudyToJson(*study).dump(2) + "\n");
      !s.ok()) {
    return Fail(s);
  }
  std::cout << "wrote study " << study->study_id << " with "
            << study->questions.size() << " questions to " << args.out << "\n";
  return 0;
}

absl::StatusOr<StudyDefinition> ReadStudyFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": invalid JSON"));
  }
  return StudyFromJson(json);
}

struct StudyServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data;
  std::vector<std::string> publish;
};

int RunStudyServe(const StudyServeArgs& args) {
  absl::StatusOr<std::unique_ptr<SessionStore>> store =
      SessionStore::Open(args.data);
  if (!store.ok()) return Fail(store.status());
  for (const std::string& path : args.publish) {
    absl::StatusOr<StudyDefinition> study = ReadStudyFile(path);
    if (!study.ok()) return Fail(study.status());
    absl::StatusOr<std::string> id = (*store)->PublishStudy(*study);
    if (!id.ok()) return Fail(id.status());
  }

  // SIGINT/SIGTERM are taken synchronously by a watcher thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  StudyServer server(**store);
  int port = args.port;
  if (port == 0) {
    port = server.BindToAnyPort(args.host);
  } else if (!server.Bind(args.host, port)) {
    port = -1;
  }
  if (port < 0) {
    return Fail(absl::UnavailableError(
        absl::StrCat("cannot bind ", args.host, ":", args.port)));
  }
  std::thread watcher([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.Stop();
  });
  watcher.detach();
  std::cout << "listening on " << args.host << ":" << port << std::endl;
  server.ListenAfterBind();
  return 0;
}

int RunStudyScore(const std::string& data, const std::string& study_id,
                  const std::string& out) {
  absl::StatusOr<std::unique_ptr<SessionStore>> store =
      SessionStore::Open(data);
  if (!store.ok()) return Fail(store.status());
  absl::StatusOr<nlohmann::ordered_json> results = (*store)->Results(study_id);
  if (!results.ok()) return Fail(results.status());
  const std::string text = results->dump(2);
  if (out.empty()) {
    std::cout << text << "\n";
  } else if (absl::Status s = WriteText(out, text + "\n"); !s.ok()) {
    return Fail(s);
  }
  return 0;
}

}  // namespace
}  // namespace nlicheck

int main(int argc, char** argv) {
  using namespace nlicheck;  // NOLINT
  CLI::App app{"Template-based behavioural testing of NLI models"};
  app.require_subcommand(1);
  int rc = 0;

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "Expand templates into a suite");
  generate->add_option("--templates", gen.templates, "Template file or directory")
      ->capture_default_str();
  generate->add_option("--lexicons", gen.lexicons, "Lexicon file or directory")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  generate->add_option("--out", gen.out, "Suite JSONL path")->required();
  generate->add_option("--per-template", gen.per_template,
                       "Examples per template")->capture_default_str();
  generate->add_option("--knowledge-per-template", gen.knowledge_per_template,
                       "Examples per Knowledge template")->capture_default_str();
  generate->add_option("--threads", gen.threads, "Worker threads (0 = all cores)");
  generate->callback([&] { rc = RunGenerate(gen); });

  std::string check_templates = DefaultTemplates();
  std::string check_lexicons = DefaultLexicons();
  CLI::App* check = app.add_subcommand("check", "Validate templates against lexicons");
  check->add_option("--templates", check_templates)->capture_default_str();
  check->add_option("--lexicons", check_lexicons)->capture_default_str();
  check->callback([&] { rc = RunCheck(check_templates, check_lexicons); });

  EvaluateArgs eval;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a model on a suite");
  evaluate->add_option("--suite", eval.suite)->required();
  CLI::Option* endpoint = evaluate->add_option("--endpoint", eval.endpoint,
                                               "Model server base URL");
  CLI::Option* preds = evaluate->add_option("--predictions", eval.predictions,
                                            "Predictions JSONL");
  endpoint->excludes(preds);
  evaluate->add_option("--cache", eval.cache, "Prediction cache directory")
      ->capture_default_str();
  evaluate->add_option("--out", eval.out, "Write the predictions used here");
  evaluate->add_option("--report", eval.report, "Write report files here");
  evaluate->add_flag("--embeddings", eval.embeddings, "Also fetch embeddings");
  evaluate->add_option("--concurrency", eval.concurrency)->capture_default_str();
  evaluate->callback([&] {
    if (eval.endpoint.empty() == eval.predictions.empty()) {
      throw CLI::ValidationError("evaluate",
                                 "exactly one of --endpoint or --predictions");
    }
    rc = RunEvaluate(eval);
  });

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand("analyze", "Write capability, slice and importance reports");
  analyze->add_option("--suite", an.suite)->required();
  analyze->add_option("--predictions", an.predictions)->required();
  analyze->add_option("--report", an.report, "Output directory")->required();
  analyze->add_option("--slice", an.slices, "TEMPLATE:KEY[:ATTR], repeatable");
  analyze->add_flag("--importance", an.importance, "Fit placeholder importance");
  analyze->add_option("--model", an.model, "Model for slices and importance");
  analyze->add_option("--templates", an.templates)->capture_default_str();
  analyze->add_option("--lexicons", an.lexicons)->capture_default_str();
  analyze->add_option("--lambda", an.lambda)->capture_default_str();
  analyze->add_option("--top-words", an.top_k)->capture_default_str();
  analyze->add_flag("--per-example", an.per_example,
                    "Regress example correctness instead of template accuracy");
  analyze->add_option("--min-support", an.min_support)->capture_default_str();
  analyze->callback([&] { rc = RunAnalyze(an); });

  CLI::App* annotate = app.add_subcommand("annotate", "Human validation of gold labels");
  annotate->require_subcommand(1);
  AnnotateExportArgs ax;
  CLI::App* ann_export = annotate->add_subcommand("export", "Sample a CSV sheet");
  ann_export->add_option("--suite", ax.suite)->required();
  ann_export->add_option("--out", ax.out)->required();
  ann_export->add_option("--per-template", ax.per_template)->capture_default_str();
  ann_export->add_option("--seed", ax.seed)->capture_default_str();
  ann_export->add_option("--annotators", ax.annotators)->delimiter(',');
  ann_export->callback([&] { rc = RunAnnotateExport(ax); });
  std::string ai_suite, ai_csv, ai_out;
  CLI::App* ann_import = annotate->add_subcommand("import", "Agreement report from a filled sheet");
  ann_import->add_option("--suite", ai_suite)->required();
  ann_import->add_option("--csv", ai_csv)->required();
  ann_import->add_option("--out", ai_out, "Report JSON (default stdout)");
  ann_import->callback([&] { rc = RunAnnotateImport(ai_suite, ai_csv, ai_out); });

  CLI::App* study = app.add_subcommand("study", "Simulation studies");
  study->require_subcommand(1);
  StudyBuildArgs sb;
  CLI::App* build = study->add_subcommand("build", "Build a study definition");
  build->add_option("--suite", sb.suite)->required();
  build->add_option("--endpoint", sb.endpoint, "Model server (queried for explanations)")
      ->required();
  build->add_option("--predictions", sb.predictions,
                    "Predictions with embeddings (default: fetch)");
  build->add_option("--cache", sb.cache)->capture_default_str();
  build->add_option("--model", sb.model);
  build->add_option("--pool", sb.pool_file, "External pool JSONL");
  build->add_option("--pool-predictions", sb.pool_predictions);
  build->add_option("--pool-id", sb.pool_id)->capture_default_str();
  build->add_option("--study-id", sb.study_id)->capture_default_str();
  build->add_option("--templates", sb.templates)->capture_default_str();
  build->add_option("--per-template", sb.per_template)->capture_default_str();
  build->add_option("--template-ids", sb.template_ids)->delimiter(',');
  build->add_option("--seed", sb.seed)->capture_default_str();
  build->add_option("--neighbors", sb.neighbors)->capture_default_str();
  build->add_option("--lime-samples", sb.lime_samples)->capture_default_str();
  build->add_option("--out", sb.out)->required();
  build->callback([&] { rc = RunStudyBuild(sb); });

  StudyServeArgs ss;
  CLI::App* serve = study->add_subcommand("serve", "Run the study HTTP service");
  serve->add_option("--port", ss.port, "0 picks a free port")->capture_default_str();
  serve->add_option("--host", ss.host)->capture_default_str();
  serve->add_option("--data", ss.data)->required();
  serve->add_option("--publish", ss.publish, "Study definition to publish");
  serve->callback([&] { rc = RunStudyServe(ss); });

  std::string sc_data, sc_study, sc_out;
  CLI::App* score = study->add_subcommand("score", "Score complete sessions");
  score->add_option("--data", sc_data)->required();
  score->add_option("--study", sc_study)->required();
  score->add_option("--out", sc_out);
  score->callback([&] { rc = RunStudyScore(sc_data, sc_study, sc_out); });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
