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

// Example-based explanation panels: nearest neighbours in a model's embedding
// space, each shown with the model's label and its locally most important
// words from a perturbation surrogate.

#ifndef NLICHECK_EXPLAINER_H_
#define NLICHECK_EXPLAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "nlicheck/labels.h"
#include "nlicheck/predictions.h"
#include "nlicheck/suite.h"
#include "nlohmann/json.hpp"

namespace nlicheck {

absl::StatusOr<double> CosineDistance(std::span<const double> u,
                                      std::span<const double> v);

struct PoolItem {
  std::string id;
  std::vector<double> embedding;
};

// The k pool ids closest to `query` by cosine distance, ties by id. Items for
// which `exclude` returns true are skipped.
absl::StatusOr<std::vector<std::string>> NearestNeighbors(
    std::span<const double> query, const std::vector<PoolItem>& pool, size_t k,
    const std::function<bool(const std::string&)>& exclude = nullptr);

enum class Sentence { kPremise, kHypothesis };

struct Token {
  std::string text;
  size_t begin = 0;  // byte span in the sentence
  size_t end = 0;
};

// Splits on whitespace; each punctuation character is its own token.
std::vector<Token> Tokenize(std::string_view sentence);

struct TokenAttribution {
  Sentence sentence = Sentence::kPremise;
  size_t index = 0;  // token index within its sentence
  std::string token;
  double weight = 0.0;
};

struct LimeOptions {
  int samples = 500;
  double kernel_width = 0.25;
  double lambda = 1e-3;
  uint64_t seed = 0;
};

// Perturbation surrogate: random keep/drop masks over the premise and
// hypothesis tokens, the black box evaluated on each masked text, and a
// kernel-weighted ridge fit from masks to the probability of the label the
// model predicts on the unmasked pair. One attribution per token, premise
// tokens first.
absl::StatusOr<std::vector<TokenAttribution>> LimeExplain(
    std::string_view premise, std::string_view hypothesis,
    Predictor& predictor, const LimeOptions& options = {});

// Top-n attributions of one sentence by |weight|, ties by position.
std::vector<TokenAttribution> TopTokens(
    const std::vector<TokenAttribution>& attributions, Sentence sentence,
    size_t n = 3);

inline constexpr std::string_view kChecklistPool = "checklist";

struct PanelNeighbor {
  std::string id;
  std::string premise;
  std::string hypothesis;
  Label predicted = Label::kEntailment;
  std::vector<TokenAttribution> premise_highlights;
  std::vector<TokenAttribution> hypothesis_highlights;
};

struct ExplanationPanel {
  std::string pool_id;
  std::string premise;
  std::string hypothesis;
  std::vector<PanelNeighbor> neighbors;
};

// A source of neighbour candidates: texts plus the model's records for them.
struct ExamplePool {
  struct Item {
    std::string id;
    std::string template_id;  // empty for external pools
    std::string premise;
    std::string hypothesis;
  };
  std::string pool_id;
  std::vector<Item> items;
  std::vector<PredictionRecord> records;

  static ExamplePool FromSuite(const SuiteDataset& suite,
                               std::vector<PredictionRecord> records);
};

// External pool file: JSON-lines {id, premise, hypothesis}.
absl::StatusOr<ExamplePool> LoadExternalPool(
    std::string pool_id, const std::string& pool_path,
    const std::string& predictions_path);

struct PanelOptions {
  size_t k = 5;
  size_t highlights = 3;
  LimeOptions lime;
};

// Builds the panel for `test_example` whose embedding is `test_record`. For
// the checklist pool, examples of the test example's template are excluded.
absl::StatusOr<ExplanationPanel> BuildPanel(
    const GeneratedExample& test_example, const PredictionRecord& test_record,
    const ExamplePool& pool, Predictor& predictor,
    const PanelOptions& options = {});

// `include_ids` controls whether neighbour ids are written (they embed
// template ids, so participant-facing payloads omit them).
nlohmann::ordered_json PanelToJson(const ExplanationPanel& panel,
                                   bool include_ids);
absl::StatusOr<ExplanationPanel> PanelFromJson(const nlohmann::json& json);

}  // namespace nlicheck

#endif  // NLICHECK_EXPLAINER_H_
