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

// An in-process model endpoint speaking the /health and /predict protocol.

#ifndef NLICHECK_TESTS_MOCK_MODEL_SERVER_H_
#define NLICHECK_TESTS_MOCK_MODEL_SERVER_H_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "nlicheck/labels.h"
#include "nlohmann/json.hpp"

namespace nlicheck::testing {

class MockModelServer {
 public:
  using ProbsFn =
      std::function<LabelDist(const std::string&, const std::string&)>;

  MockModelServer(std::string model_id, ProbsFn probs, int embedding_dim = 4)
      : model_id_(std::move(model_id)),
        probs_(std::move(probs)),
        embedding_dim_(embedding_dim) {
    server_.Get("/health", [this](const httplib::Request&,
                                  httplib::Response& res) {
      nlohmann::json j;
      j["model_id"] = model_id_;
      j["embedding_dim"] = embedding_dim_;
      res.set_content(j.dump(), "application/json");
    });
    server_.Post("/predict", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      const int now = ++in_flight_;
      int seen = max_in_flight_.load();
      while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
      }
      ++predict_calls_;
      if (delay_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      }
      Respond(req, res);
      --in_flight_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockModelServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  int predict_calls() const { return predict_calls_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

  // Knobs, set before use.
  std::atomic<int> fail_with_500{0};  // the next N /predict calls fail
  int fail_status = 0;                // every call returns this, if set
  bool bad_sum = false;
  bool drop_probs = false;
  int delay_ms = 0;

 private:
  void Respond(const httplib::Request& req, httplib::Response& res) {
    if (fail_status != 0) {
      res.status = fail_status;
      res.set_content("no", "text/plain");
      return;
    }
    if (fail_with_500.fetch_sub(1) > 0) {
      res.status = 500;
      return;
    }
    nlohmann::json in = nlohmann::json::parse(req.body, nullptr, false);
    if (in.is_discarded() || !in.contains("premise") ||
        !in.contains("hypothesis")) {
      res.status = 400;
      return;
    }
    const std::string premise = in["premise"].get<std::string>();
    const std::string hypothesis = in["hypothesis"].get<std::string>();
    LabelDist p = probs_(premise, hypothesis);
    if (bad_sum) p.p = {0.3, 0.3, 0.3};
    nlohmann::json out;
    out["model_id"] = model_id_;
    if (!drop_probs) {
      out["probs"] = {{"entailment", p.p[0]},
                      {"neutral", p.p[1]},
                      {"contradiction", p.p[2]}};
    }
    std::vector<double> embedding(embedding_dim_);
    for (int i = 0; i < embedding_dim_; ++i) {
      embedding[i] = static_cast<double>(
                         std::hash<std::string>{}(premise + "|" + hypothesis +
                                                  std::to_string(i)) %
                         1000) /
                     1000.0;
    }
    out["embedding"] = embedding;
    res.set_content(out.dump(), "application/json");
  }

  std::string model_id_;
  ProbsFn probs_;
  int embedding_dim_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> predict_calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace nlicheck::testing

#endif  // NLICHECK_TESTS_MOCK_MODEL_SERVER_H_
