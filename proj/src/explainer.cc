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

#include "nlicheck/explainer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "io_util.h"
#include "nlicheck/ridge.h"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

bool IsSpace(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool IsPunct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Reassembles `sentence` from the kept tokens, keeping a single space
// wherever the original had whitespace before a kept token.
std::string MaskedText(std::string_view sentence,
                       const std::vector<Token>& tokens,
                       const std::vector<char>& keep, size_t offset) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!keep[offset + i]) continue;
    const Token& t = tokens[i];
    if (!out.empty() && t.begin > 0 && IsSpace(sentence[t.begin - 1])) {
      out.push_back(' ');
    }
    out += t.text;
  }
  return out;
}

uint64_t HashId(std::string_view id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ordered_json HighlightsToJson(const std::vector<TokenAttribution>& tokens) {
  ordered_json out = ordered_json::array();
  for (const TokenAttribution& t : tokens) {
    ordered_json j;
    j["index"] = t.index;
    j["token"] = t.token;
    j["weight"] = t.weight;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<TokenAttribution> HighlightsFromJson(const nlohmann::json& j,
                                                 Sentence sentence) {
  std::vector<TokenAttribution> out;
  for (const auto& item : j) {
    TokenAttribution t;
    t.sentence = sentence;
    t.index = item.at("index").get<size_t>();
    t.token = item.at("token").get<std::string>();
    t.weight = item.at("weight").get<double>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

absl::StatusOr<double> CosineDistance(std::span<const double> u,
                                      std::span<const double> v) {
  if (u.size() != v.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: ", u.size(), " vs ", v.size()));
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    return absl::InvalidArgumentError("cosine distance of a zero vector");
  }
  double d = 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(d, 0.0, 2.0);
}

absl::StatusOr<std::vector<std::string>> NearestNeighbors(
    std::span<const double> query, const std::vector<PoolItem>& pool, size_t k,
    const std::function<bool(const std::string&)>& exclude) {
  std::vector<std::pair<double, const std::string*>> scored;
  for (const PoolItem& item : pool) {
    if (exclude && exclude(item.id)) continue;
    absl::StatusOr<double> d = CosineDistance(query, item.embedding);
    if (!d.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "pool item ", item.id, ": ", std::string(d.status().message())));
    }
    scored.emplace_back(*d, &item.id);
  }
  if (scored.size() < k) {
    return absl::FailedPreconditionError(absl::StrCat(
        "pool has ", scored.size(), " eligible items, ", k, " needed"));
  }
  auto less = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), less);
  std::vector<std::string> out;
  for (size_t i = 0; i < k; ++i) out.push_back(*scored[i].second);
  return out;
}

std::vector<Token> Tokenize(std::string_view sentence) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < sentence.size()) {
    if (IsSpace(sentence[i])) {
      ++i;
      continue;
    }
    if (IsPunct(sentence[i])) {
      tokens.push_back({std::string(1, sentence[i]), i, i + 1});
      ++i;
      continue;
    }
    size_t start = i;
    while (i < sentence.size() && !IsSpace(sentence[i]) &&
           !IsPunct(sentence[i])) {
      ++i;
    }
    tokens.push_back({std::string(sentence.substr(start, i - start)), start, i});
  }
  return tokens;
}

absl::StatusOr<std::vector<TokenAttribution>> LimeExplain(
    std::string_view premise, std::string_view hypothesis,
    Predictor& predictor, const LimeOptions& options) {
  const std::vector<Token> p_tokens = Tokenize(premise);
  const std::vector<Token> h_tokens = Tokenize(hypothesis);
  const size_t total = p_tokens.size() + h_tokens.size();
  if (total == 0) return std::vector<TokenAttribution>{};
  if (options.samples < static_cast<int>(total) + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        options.samples, " samples cannot determine ", total,
        " token weights; need at least ", total + 1));
  }
  if (!(options.kernel_width > 0.0)) {
    return absl::InvalidArgumentError("kernel width must be positive");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<char>> masks(options.samples,
                                       std::vector<char>(total, 1));
  for (int s = 1; s < options.samples; ++s) {
    for (size_t t = 0; t < total; ++t) masks[s][t] = (rng() >> 63) ? 1 : 0;
  }
  std::vector<PredictionRequest> requests;
  requests.reserve(masks.size());
  for (const std::vector<char>& mask : masks) {
    requests.push_back({MaskedText(premise, p_tokens, mask, 0),
                        MaskedText(hypothesis, h_tokens, mask,
                                   p_tokens.size())});
  }
  absl::StatusOr<std::vector<PredictionResponse>> responses =
      predictor.PredictBatch(requests);
  if (!responses.ok()) return responses.status();
  if (responses->size() != requests.size()) {
    return absl::InternalError("predictor returned the wrong batch size");
  }
  const Label target = responses->front().probs.Argmax();

  Eigen::MatrixXd x(options.samples, static_cast<Eigen::Index>(total));
  Eigen::VectorXd y(options.samples);
  Eigen::VectorXd w(options.samples);
  const double sigma2 = options.kernel_width * options.kernel_width;
  for (int s = 0; s < options.samples; ++s) {
    int dropped = 0;
    for (size_t t = 0; t < total; ++t) {
      x(s, static_cast<Eigen::Index>(t)) = masks[s][t];
      dropped += masks[s][t] ? 0 : 1;
    }
    const double d = static_cast<double>(dropped) / total;
    w[s] = std::exp(-d * d / sigma2);
    y[s] = (*responses)[s].probs[target];
  }
  absl::StatusOr<RidgeSolution> fit =
      SolveRidge(x, y, options.lambda, /*fit_intercept=*/true, w);
  if (!fit.ok()) return fit.status();

  std::vector<TokenAttribution> out;
  out.reserve(total);
  for (size_t t = 0; t < total; ++t) {
    TokenAttribution a;
    const bool in_premise = t < p_tokens.size();
    a.sentence = in_premise ? Sentence::kPremise : Sentence::kHypothesis;
    a.index = in_premise ? t : t - p_tokens.size();
    a.token = in_premise ? p_tokens[a.index].text : h_tokens[a.index].text;
    a.weight = fit->coefficients[static_cast<Eigen::Index>(t)];
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<TokenAttribution> TopTokens(
    const std::vector<TokenAttribution>& attributions, Sentence sentence,
    size_t n) {
  std::vector<TokenAttribution> picked;
  for (const TokenAttribution& a : attributions) {
    if (a.sentence == sentence) picked.push_back(a);
  }
  std::stable_sort(picked.begin(), picked.end(),
                   [](const TokenAttribution& a, const TokenAttribution& b) {
                     double wa = std::abs(a.weight);
                     double wb = std::abs(b.weight);
                     if (wa != wb) return wa > wb;
                     return a.index < b.index;
                   });
  if (picked.size() > n) picked.resize(n);
  return picked;
}

ExamplePool ExamplePool::FromSuite(const SuiteDataset& suite,
                                   std::vector<PredictionRecord> records) {
  ExamplePool pool;
  pool.pool_id = std::string(kChecklistPool);
  for (const GeneratedExample& ex : suite.examples) {
    pool.items.push_back(
        {ex.example_id, ex.template_id, ex.premise, ex.hypothesis});
  }
  pool.records = std::move(records);
  return pool;
}

absl::StatusOr<ExamplePool> LoadExternalPool(
    std::string pool_id, const std::string& pool_path,
    const std::string& predictions_path) {
  if (pool_id == kChecklistPool) {
    return absl::InvalidArgumentError(
        "the checklist pool id is reserved for the suite itself");
  }
  absl::StatusOr<std::string> text = ReadFile(pool_path);
  if (!text.ok()) return text.status();
  ExamplePool pool;
  pool.pool_id = std::move(pool_id);
  std::set<std::string> ids;
  size_t start = 0;
  int line_no = 0;
  while (start < text->size()) {
    size_t end = text->find('\n', start);
    if (end == std::string::npos) end = text->size();
    std::string_view line(text->data() + start, end - start);
    start = end + 1;
    ++line_no;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("premise") || !j.contains("hypothesis")) {
      return absl::InvalidArgumentError(absl::StrCat(
          pool_path, ":", line_no, ": expected {id, premise, hypothesis}"));
    }
    ExamplePool::Item item;
    try {
      item.id = j["id"].get<std::string>();
      item.premise = j["premise"].get<std::string>();
      item.hypothesis = j["hypothesis"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat(pool_path, ":", line_no, ": ", e.what()));
    }
    if (!ids.insert(item.id).second) {
      return absl::InvalidArgumentError(absl::StrCat(
          pool_path, ":", line_no, ": duplicate id ", item.id));
    }
    pool.items.push_back(std::move(item));
  }
  absl::StatusOr<std::vector<PredictionRecord>> records =
      ReadPredictionsFile(predictions_path);
  if (!records.ok()) return records.status();
  for (const PredictionRecord& r : *records) {
    if (!ids.contains(r.example_id)) {
      return absl::NotFoundError(absl::StrCat(
          predictions_path, ": record for unknown pool id ", r.example_id));
    }
  }
  pool.records = *std::move(records);
  return pool;
}

absl::StatusOr<ExplanationPanel> BuildPanel(
    const GeneratedExample& test_example, const PredictionRecord& test_record,
    const ExamplePool& pool, Predictor& predictor,
    const PanelOptions& options) {
  if (test_record.embedding.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "no embedding for test example ", test_example.example_id));
  }
  std::map<std::string, const PredictionRecord*> records;
  for (const PredictionRecord& r : pool.records) {
    if (r.model_id == test_record.model_id) records[r.example_id] = &r;
  }
  const bool checklist = pool.pool_id == kChecklistPool;
  std::map<std::string, const ExamplePool::Item*> items;
  std::vector<PoolItem> candidates;
  for (const ExamplePool::Item& item : pool.items) {
    if (item.id == test_example.example_id) continue;
    if (checklist && item.template_id == test_example.template_id) continue;
    auto it = records.find(item.id);
    if (it == records.end() || it->second->embedding.empty()) {
      return absl::FailedPreconditionError(
          absl::StrCat("pool ", pool.pool_id, " item ", item.id,
                       " has no embedding from model ", test_record.model_id));
    }
    items[item.id] = &item;
    candidates.push_back({item.id, it->second->embedding});
  }
  absl::StatusOr<std::vector<std::string>> neighbors =
      NearestNeighbors(test_record.embedding, candidates, options.k);
  if (!neighbors.ok()) return neighbors.status();

  ExplanationPanel panel;
  panel.pool_id = pool.pool_id;
  panel.premise = test_example.premise;
  panel.hypothesis = test_example.hypothesis;
  for (const std::string& id : *neighbors) {
    const ExamplePool::Item& item = *items.at(id);
    PanelNeighbor neighbor;
    neighbor.id = id;
    neighbor.premise = item.premise;
    neighbor.hypothesis = item.hypothesis;
    neighbor.predicted = records.at(id)->predicted;
    LimeOptions lime = options.lime;
    lime.seed = options.lime.seed ^ HashId(id);
    absl::StatusOr<std::vector<TokenAttribution>> weights =
        LimeExplain(item.premise, item.hypothesis, predictor, lime);
    if (!weights.ok()) {
      return absl::Status(weights.status().code(),
                          absl::StrCat("explaining ", id, ": ",
                                       std::string(weights.status().message())));
    }
    neighbor.premise_highlights =
        TopTokens(*weights, Sentence::kPremise, options.highlights);
    neighbor.hypothesis_highlights =
        TopTokens(*weights, Sentence::kHypothesis, options.highlights);
    panel.neighbors.push_back(std::move(neighbor));
  }
  return panel;
}

nlohmann::ordered_json PanelToJson(const ExplanationPanel& panel,
                                   bool include_ids) {
  ordered_json j;
  j["pool_id"] = panel.pool_id;
  j["test_example"] = {{"premise", panel.premise},
                       {"hypothesis", panel.hypothesis}};
  ordered_json neighbors = ordered_json::array();
  for (const PanelNeighbor& n : panel.neighbors) {
    ordered_json row;
    if (include_ids) row["id"] = n.id;
    row["premise"] = n.premise;
    row["hypothesis"] = n.hypothesis;
    row["predicted"] = std::string(LabelName(n.predicted));
    row["premise_highlights"] = HighlightsToJson(n.premise_highlights);
    row["hypothesis_highlights"] = HighlightsToJson(n.hypothesis_highlights);
    neighbors.push_back(std::move(row));
  }
  j["neighbors"] = std::move(neighbors);
  return j;
}

absl::StatusOr<ExplanationPanel> PanelFromJson(const nlohmann::json& json) {
  ExplanationPanel panel;
  try {
    panel.pool_id = json.at("pool_id").get<std::string>();
    panel.premise = json.at("test_example").at("premise").get<std::string>();
    panel.hypothesis =
        json.at("test_example").at("hypothesis").get<std::string>();
    for (const auto& row : json.at("neighbors")) {
      PanelNeighbor n;
      n.id = row.value("id", "");
      n.premise = row.at("premise").get<std::string>();
      n.hypothesis = row.at("hypothesis").get<std::string>();
      std::string predicted = row.at("predicted").get<std::string>();
      std::optional<Label> label = ParseLabel(predicted);
      if (!label) {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown label '", predicted, "'"));
      }
      n.predicted = *label;
      n.premise_highlights =
          HighlightsFromJson(row.at("premise_highlights"), Sentence::kPremise);
      n.hypothesis_highlights = HighlightsFromJson(
          row.at("hypothesis_highlights"), Sentence::kHypothesis);
      panel.neighbors.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad panel: ", e.what()));
  }
  return panel;
}

}  // namespace nlicheck
