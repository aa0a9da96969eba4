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

#include "nlicheck/predictions.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "httplib.h"
#include "io_util.h"
#include "nlohmann/json.hpp"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

absl::StatusOr<LabelDist> ProbsFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("probs is not an object");
  LabelDist probs;
  for (Label label : kAllLabels) {
    auto it = j.find(std::string(LabelName(label)));
    if (it == j.end() || !it->is_number()) {
      return absl::InvalidArgumentError(
          absl::StrCat("probs lacks ", std::string(LabelName(label))));
    }
    probs[label] = it->get<double>();
  }
  if (j.size() != 3) {
    return absl::InvalidArgumentError("probs has unexpected labels");
  }
  return probs;
}

ordered_json ProbsToJson(const LabelDist& probs) {
  ordered_json j;
  for (Label label : kAllLabels) j[std::string(LabelName(label))] = probs[label];
  return j;
}

absl::StatusOr<std::vector<double>> EmbeddingFromJson(const nlohmann::json& j) {
  if (!j.is_array()) {
    return absl::InvalidArgumentError("embedding is not an array");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      return absl::InvalidArgumentError("embedding has a non-number");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::string CacheFileName(std::string_view model_id) {
  std::string out;
  for (char c : model_id) {
    bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '_' || c == '.';
    out.push_back(safe ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_model";
  return out + ".jsonl";
}

}  // namespace

absl::Status ValidateProbs(const LabelDist& probs) {
  for (Label label : kAllLabels) {
    double p = probs[label];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "probability of ", std::string(LabelName(label)), " is ", p));
    }
  }
  if (std::abs(probs.Sum() - 1.0) > kProbabilitySumTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("probabilities sum to ", probs.Sum()));
  }
  return absl::OkStatus();
}

std::string RecordToJsonLine(const PredictionRecord& record) {
  ordered_json j;
  j["example_id"] = record.example_id;
  j["model_id"] = record.model_id;
  j["probs"] = ProbsToJson(record.probs);
  if (!record.embedding.empty()) j["embedding"] = record.embedding;
  return j.dump();
}

absl::StatusOr<PredictionRecord> RecordFromJsonLine(std::string_view line,
                                                    std::string_view source) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("not a JSON object");
  }
  PredictionRecord record;
  record.source = std::string(source);
  auto id = j.find("example_id");
  if (id == j.end() || !id->is_string()) {
    return absl::InvalidArgumentError("missing example_id");
  }
  record.example_id = id->get<std::string>();
  auto model = j.find("model_id");
  if (model == j.end() || !model->is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat("example ", record.example_id, ": missing model_id"));
  }
  record.model_id = model->get<std::string>();
  auto probs = j.find("probs");
  if (probs == j.end()) {
    return absl::InvalidArgumentError(
        absl::StrCat("example ", record.example_id, ": missing probs"));
  }
  absl::StatusOr<LabelDist> dist = ProbsFromJson(*probs);
  absl::Status valid = dist.ok() ? ValidateProbs(*dist) : dist.status();
  if (!valid.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "example ", record.example_id, ": ", std::string(valid.message())));
  }
  record.probs = *dist;
  record.predicted = record.probs.Argmax();
  if (auto emb = j.find("embedding"); emb != j.end() && !emb->is_null()) {
    absl::StatusOr<std::vector<double>> embedding = EmbeddingFromJson(*emb);
    if (!embedding.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("example ", record.example_id, ": ",
                       std::string(embedding.status().message())));
    }
    record.embedding = *std::move(embedding);
  }
  return record;
}

absl::StatusOr<std::vector<PredictionRecord>> ReadPredictionsFile(
    const std::filesystem::path& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  std::vector<PredictionRecord> records;
  size_t start = 0;
  int line_no = 0;
  while (start < text->size()) {
    size_t end = text->find('\n', start);
    if (end == std::string::npos) end = text->size();
    std::string_view line(text->data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path.string(), ":", line_no, ": blank line"));
    }
    absl::StatusOr<PredictionRecord> record =
        RecordFromJsonLine(line, path.string());
    if (!record.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path.string(), ":", line_no, ": ",
                       std::string(record.status().message())));
    }
    records.push_back(*std::move(record));
  }
  return records;
}

absl::Status WritePredictionsFile(const std::vector<PredictionRecord>& records,
                                  const std::filesystem::path& path) {
  std::string out;
  for (const PredictionRecord& r : records) {
    absl::StrAppend(&out, RecordToJsonLine(r), "\n");
  }
  return WriteFileAtomic(path, out);
}

RecordIndex::RecordIndex(const std::vector<PredictionRecord>& records) {
  for (const PredictionRecord& r : records) by_id_[r.example_id] = &r;
}

const PredictionRecord* RecordIndex::Find(const std::string& example_id) const {
  auto it = by_id_.find(example_id);
  return it == by_id_.end() ? nullptr : it->second;
}

std::map<std::string, std::vector<PredictionRecord>> GroupByModel(
    const std::vector<PredictionRecord>& records) {
  std::map<std::string, std::vector<PredictionRecord>> out;
  for (const PredictionRecord& r : records) out[r.model_id].push_back(r);
  return out;
}

FunctionPredictor::FunctionPredictor(std::string model_id, ProbsFn probs,
                                     EmbeddingFn embedding)
    : model_id_(std::move(model_id)),
      probs_(std::move(probs)),
      embedding_(std::move(embedding)) {}

absl::StatusOr<std::vector<PredictionResponse>> FunctionPredictor::PredictBatch(
    const std::vector<PredictionRequest>& requests) {
  std::vector<PredictionResponse> out;
  out.reserve(requests.size());
  for (const PredictionRequest& request : requests) {
    calls_.fetch_add(1);
    PredictionResponse response;
    response.model_id = model_id_;
    response.probs = probs_(request.premise, request.hypothesis);
    if (embedding_) {
      response.embedding = embedding_(request.premise, request.hypothesis);
    }
    out.push_back(std::move(response));
  }
  return out;
}

HttpPredictor::HttpPredictor(std::string base_url, HttpPredictorOptions options)
    : base_url_(std::move(base_url)), options_(options) {}

absl::StatusOr<std::unique_ptr<HttpPredictor>> HttpPredictor::Connect(
    std::string base_url, HttpPredictorOptions options) {
  while (!base_url.empty() && base_url.back() == '/') base_url.pop_back();
  if (options.concurrency < 1 || options.retries < 0) {
    return absl::InvalidArgumentError("bad predictor options");
  }
  std::unique_ptr<HttpPredictor> predictor(
      new HttpPredictor(base_url, options));
  httplib::Client client(predictor->base_url_);
  client.set_connection_timeout(options.timeout_seconds, 0);
  client.set_read_timeout(options.timeout_seconds, 0);
  std::string last_error;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options.backoff_ms << (attempt - 1)));
    }
    predictor->requests_.fetch_add(1);
    httplib::Result result = client.Get("/health");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_error = absl::StrCat("HTTP ", result->status);
      if (result->status < 500) break;
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(result->body, nullptr, false);
    if (j.is_discarded() || !j.contains("model_id") ||
        !j["model_id"].is_string()) {
      return absl::InvalidArgumentError(
          "protocol violation: /health must return {model_id, embedding_dim}");
    }
    predictor->model_id_ = j["model_id"].get<std::string>();
    if (auto dim = j.find("embedding_dim");
        dim != j.end() && dim->is_number_integer()) {
      predictor->embedding_dim_ = dim->get<int>();
    }
    return predictor;
  }
  return absl::UnavailableError(absl::StrCat(
      "model endpoint ", base_url, " unreachable: ", last_error));
}

absl::StatusOr<PredictionResponse> HttpPredictor::PredictOne(
    const PredictionRequest& request) {
  thread_local std::unique_ptr<httplib::Client> client;
  thread_local std::string client_url;
  if (client == nullptr || client_url != base_url_) {
    client = std::make_unique<httplib::Client>(base_url_);
    client->set_connection_timeout(options_.timeout_seconds, 0);
    client->set_read_timeout(options_.timeout_seconds, 0);
    client->set_keep_alive(true);
    client_url = base_url_;
  }
  ordered_json body;
  body["premise"] = request.premise;
  body["hypothesis"] = request.hypothesis;
  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
    }
    requests_.fetch_add(1);
    httplib::Result result =
        client->Post("/predict", payload, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_error = absl::StrCat("HTTP ", result->status);
      continue;
    }
    if (result->status != 200) {
      return absl::InvalidArgumentError(
          absl::StrCat("/predict returned HTTP ", result->status, ": ",
                       result->body));
    }
    nlohmann::json j = nlohmann::json::parse(result->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("probs")) {
      return absl::InvalidArgumentError(
          "protocol violation: /predict must return {model_id, probs, "
          "embedding}");
    }
    PredictionResponse response;
    response.model_id = j.value("model_id", model_id_);
    absl::StatusOr<LabelDist> probs = ProbsFromJson(j["probs"]);
    if (!probs.ok()) return probs.status();
    response.probs = *probs;
    if (auto emb = j.find("embedding"); emb != j.end() && !emb->is_null()) {
      absl::StatusOr<std::vector<double>> embedding = EmbeddingFromJson(*emb);
      if (!embedding.ok()) return embedding.status();
      response.embedding = *std::move(embedding);
    }
    return response;
  }
  return absl::UnavailableError(absl::StrCat(
      "/predict failed after ", options_.retries + 1, " attempts: ",
      last_error));
}

absl::StatusOr<std::vector<PredictionResponse>> HttpPredictor::PredictBatch(
    const std::vector<PredictionRequest>& requests) {
  std::vector<PredictionResponse> out(requests.size());
  std::atomic<size_t> next{0};
  std::mutex mu;
  absl::Status first_error;
  size_t first_error_index = requests.size();
  auto worker = [&] {
    for (size_t i = next++; i < requests.size(); i = next++) {
      absl::StatusOr<PredictionResponse> response = PredictOne(requests[i]);
      if (!response.ok()) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = response.status();
        }
        continue;
      }
      out[i] = *std::move(response);
    }
  };
  const int threads = std::max(
      1, std::min<int>(options_.concurrency, static_cast<int>(requests.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (!first_error.ok()) {
    return absl::Status(first_error.code(),
                        absl::StrCat("request ", first_error_index, ": ",
                                     std::string(first_error.message())));
  }
  return out;
}

absl::StatusOr<std::vector<PredictionRecord>> FetchPredictions(
    const SuiteDataset& suite, Predictor& predictor,
    const std::filesystem::path& cache_dir, bool want_embeddings,
    std::string_view source) {
  const std::string model_id = predictor.model_id();
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create cache directory ",
                                            cache_dir.string(), ": ",
                                            ec.message()));
  }
  const std::filesystem::path cache_path = cache_dir / CacheFileName(model_id);
  std::map<std::string, PredictionRecord> cached;
  if (std::filesystem::exists(cache_path, ec)) {
    absl::StatusOr<std::vector<PredictionRecord>> records =
        ReadPredictionsFile(cache_path);
    if (!records.ok()) return records.status();
    for (PredictionRecord& r : *records) {
      if (r.model_id != model_id) continue;
      // Later lines supersede earlier ones (e.g. re-fetched with embeddings).
      cached[r.example_id] = std::move(r);
    }
  }

  std::vector<const GeneratedExample*> missing;
  for (const GeneratedExample& ex : suite.examples) {
    auto it = cached.find(ex.example_id);
    if (it == cached.end() || (want_embeddings && it->second.embedding.empty())) {
      missing.push_back(&ex);
    }
  }
  if (!missing.empty()) {
    std::vector<PredictionRequest> requests;
    requests.reserve(missing.size());
    for (const GeneratedExample* ex : missing) {
      requests.push_back({ex->premise, ex->hypothesis});
    }
    absl::StatusOr<std::vector<PredictionResponse>> responses =
        predictor.PredictBatch(requests);
    if (!responses.ok()) return responses.status();
    if (responses->size() != requests.size()) {
      return absl::InternalError("predictor returned the wrong batch size");
    }
    std::string appended;
    for (size_t i = 0; i < missing.size(); ++i) {
      PredictionResponse& response = (*responses)[i];
      if (absl::Status s = ValidateProbs(response.probs); !s.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("protocol violation for example ",
                         missing[i]->example_id, ": ",
                         std::string(s.message())));
      }
      if (want_embeddings && response.embedding.empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "protocol violation for example ", missing[i]->example_id,
            ": no embedding returned"));
      }
      PredictionRecord record;
      record.example_id = missing[i]->example_id;
      record.model_id = model_id;
      record.probs = response.probs;
      record.predicted = record.probs.Argmax();
      record.embedding = std::move(response.embedding);
      absl::StrAppend(&appended, RecordToJsonLine(record), "\n");
      cached[record.example_id] = std::move(record);
    }
    appended.pop_back();
    if (absl::Status s = AppendLineDurable(cache_path, appended); !s.ok()) {
      return s;
    }
  }

  std::vector<PredictionRecord> out;
  out.reserve(suite.examples.size());
  size_t dim = 0;
  for (const GeneratedExample& ex : suite.examples) {
    PredictionRecord record = cached.at(ex.example_id);
    record.source = std::string(source);
    if (!record.embedding.empty()) {
      if (dim == 0) dim = record.embedding.size();
      if (record.embedding.size() != dim) {
        return absl::InvalidArgumentError(absl::StrCat(
            "example ", ex.example_id, ": embedding dimension ",
            record.embedding.size(), " differs from ", dim));
      }
    }
    out.push_back(std::move(record));
  }
  return out;
}

absl::StatusOr<std::vector<PredictionRecord>> FetchPredictionsFromFile(
    const SuiteDataset& suite, const std::filesystem::path& path) {
  absl::StatusOr<std::vector<PredictionRecord>> records =
      ReadPredictionsFile(path);
  if (!records.ok()) return records.status();
  std::set<std::string> known;
  for (const GeneratedExample& ex : suite.examples) known.insert(ex.example_id);
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, size_t> dims;
  for (const PredictionRecord& r : *records) {
    if (!known.contains(r.example_id)) {
      return absl::NotFoundError(absl::StrCat(
          path.string(), ": record for unknown example id ", r.example_id));
    }
    if (!seen.emplace(r.model_id, r.example_id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat(path.string(), ": duplicate record for ", r.model_id,
                       "/", r.example_id));
    }
    if (!r.embedding.empty()) {
      auto [it, inserted] = dims.try_emplace(r.model_id, r.embedding.size());
      if (!inserted && it->second != r.embedding.size()) {
        return absl::InvalidArgumentError(absl::StrCat(
            path.string(), ": embedding dimension mismatch for model ",
            r.model_id, " at ", r.example_id));
      }
    }
  }
  return records;
}

}  // namespace nlicheck
