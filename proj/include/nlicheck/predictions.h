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

// Predictions from black-box NLI models.
//
// Wire protocol of a model endpoint:
//   GET  /health   -> {"model_id": str, "embedding_dim": int}
//   POST /predict  {"premise": str, "hypothesis": str}
//                  -> {"model_id": str,
//                      "probs": {"entailment": p, "neutral": p,
//                                "contradiction": p},
//                      "embedding": [float, ...]}
//
// Predictions file (JSON-lines):
//   {"example_id", "model_id", "probs": {...}, "embedding"?: [...]}

#ifndef NLICHECK_PREDICTIONS_H_
#define NLICHECK_PREDICTIONS_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlicheck/labels.h"
#include "nlicheck/suite.h"

namespace nlicheck {

inline constexpr double kProbabilitySumTolerance = 1e-6;

struct PredictionRecord {
  std::string example_id;
  LabelDist probs;
  Label predicted = Label::kEntailment;
  std::vector<double> embedding;
  std::string source;
  std::string model_id;
};

// Checks each probability is in [0,1] and they sum to 1 within tolerance.
absl::Status ValidateProbs(const LabelDist& probs);

std::string RecordToJsonLine(const PredictionRecord& record);
// Parses and validates one line; `predicted` is the argmax of probs.
absl::StatusOr<PredictionRecord> RecordFromJsonLine(std::string_view line,
                                                    std::string_view source);

absl::StatusOr<std::vector<PredictionRecord>> ReadPredictionsFile(
    const std::filesystem::path& path);
absl::Status WritePredictionsFile(const std::vector<PredictionRecord>& records,
                                  const std::filesystem::path& path);

// Records of one model, indexed by example id.
class RecordIndex {
 public:
  explicit RecordIndex(const std::vector<PredictionRecord>& records);
  const PredictionRecord* Find(const std::string& example_id) const;
  size_t size() const { return by_id_.size(); }

 private:
  std::map<std::string, const PredictionRecord*> by_id_;
};

// Splits records by model id (sorted by id).
std::map<std::string, std::vector<PredictionRecord>> GroupByModel(
    const std::vector<PredictionRecord>& records);

struct PredictionRequest {
  std::string premise;
  std::string hypothesis;
};

struct PredictionResponse {
  std::string model_id;
  LabelDist probs;
  std::vector<double> embedding;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string model_id() const = 0;
  // One response per request, same order.
  virtual absl::StatusOr<std::vector<PredictionResponse>> PredictBatch(
      const std::vector<PredictionRequest>& requests) = 0;
};

// Adapts a plain function; used by synthetic predictors.
class FunctionPredictor : public Predictor {
 public:
  using ProbsFn = std::function<LabelDist(std::string_view premise,
                                          std::string_view hypothesis)>;
  using EmbeddingFn = std::function<std::vector<double>(
      std::string_view premise, std::string_view hypothesis)>;

  FunctionPredictor(std::string model_id, ProbsFn probs,
                    EmbeddingFn embedding = nullptr);

  std::string model_id() const override { return model_id_; }
  absl::StatusOr<std::vector<PredictionResponse>> PredictBatch(
      const std::vector<PredictionRequest>& requests) override;
  int64_t calls() const { return calls_.load(); }

 private:
  std::string model_id_;
  ProbsFn probs_;
  EmbeddingFn embedding_;
  std::atomic<int64_t> calls_{0};
};

struct HttpPredictorOptions {
  int concurrency = 8;
  int retries = 3;
  int timeout_seconds = 60;
  int backoff_ms = 50;
};

// Client for the model endpoint protocol with bounded concurrency and
// per-request retries.
class HttpPredictor : public Predictor {
 public:
  // Contacts /health to learn the model id.
  static absl::StatusOr<std::unique_ptr<HttpPredictor>> Connect(
      std::string base_url, HttpPredictorOptions options = {});

  std::string model_id() const override { return model_id_; }
  int embedding_dim() const { return embedding_dim_; }
  absl::StatusOr<std::vector<PredictionResponse>> PredictBatch(
      const std::vector<PredictionRequest>& requests) override;

  // HTTP requests issued so far, including retries and the health check.
  int64_t request_count() const { return requests_.load(); }

 private:
  HttpPredictor(std::string base_url, HttpPredictorOptions options);
  absl::StatusOr<PredictionResponse> PredictOne(
      const PredictionRequest& request);

  std::string base_url_;
  HttpPredictorOptions options_;
  std::string model_id_;
  int embedding_dim_ = 0;
  std::atomic<int64_t> requests_{0};
};

// Obtains one record per suite example from `predictor`, consulting and
// extending the cache at `cache_dir`/<model-id>.jsonl. Records already cached
// are not requested again.
absl::StatusOr<std::vector<PredictionRecord>> FetchPredictions(
    const SuiteDataset& suite, Predictor& predictor,
    const std::filesystem::path& cache_dir, bool want_embeddings,
    std::string_view source);

// Reads a predictions file and checks every record refers to a suite example.
absl::StatusOr<std::vector<PredictionRecord>> FetchPredictionsFromFile(
    const SuiteDataset& suite, const std::filesystem::path& path);

}  // namespace nlicheck

#endif  // NLICHECK_PREDICTIONS_H_
