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

#include "nlicheck/study_service.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <mutex>
#include <random>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "httplib.h"
#include "io_util.h"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool IsSafeId(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
           c == '_' || c == '.';
  });
}

std::string NewSessionId() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}() ^
                             static_cast<uint64_t>(NowMs()));
  std::lock_guard<std::mutex> lock(mu);
  return absl::StrFormat("s-%016x", rng());
}

int HttpStatus(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
      return 400;
    case absl::StatusCode::kPermissionDenied:
      return 403;
    case absl::StatusCode::kNotFound:
      return 404;
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kAlreadyExists:
      return 409;
    default:
      return 500;
  }
}

void SendJson(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, const absl::Status& status) {
  SendJson(res, HttpStatus(status),
           ordered_json{{"error", std::string(status.message())}});
}

absl::StatusOr<nlohmann::json> ParseBody(const httplib::Request& req) {
  nlohmann::json j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("request body must be a JSON object");
  }
  return j;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path data_dir)
    : data_dir_(std::move(data_dir)) {}

absl::StatusOr<std::unique_ptr<SessionStore>> SessionStore::Open(
    const std::filesystem::path& data_dir) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir / "studies", ec);
  if (!ec) std::filesystem::create_directories(data_dir / "sessions", ec);
  if (ec) {
    return absl::InternalError(absl::StrCat(
        "cannot create ", data_dir.string(), ": ", ec.message()));
  }
  std::unique_ptr<SessionStore> store(new SessionStore(data_dir));
  if (absl::Status s = store->Replay(); !s.ok()) return s;
  return store;
}

absl::Status SessionStore::Replay() {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  for (const auto& entry :
       std::filesystem::directory_iterator(data_dir_ / "studies", ec)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    absl::StatusOr<std::string> text = ReadFile(path);
    if (!text.ok()) return text.status();
    nlohmann::json j = nlohmann::json::parse(*text, nullptr, false);
    if (j.is_discarded()) {
      return absl::DataLossError(absl::StrCat(path.string(), ": invalid JSON"));
    }
    absl::StatusOr<StudyDefinition> study = StudyFromJson(j);
    if (!study.ok()) return study.status();
    std::string id = study->study_id;
    studies_[id] = std::make_unique<StudyDefinition>(*std::move(study));
  }

  files.clear();
  for (const auto& entry :
       std::filesystem::directory_iterator(data_dir_ / "sessions", ec)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    absl::StatusOr<std::string> text = ReadFile(path);
    if (!text.ok()) return text.status();
    auto slot = std::make_unique<SessionSlot>();
    StudySession& session = slot->session;
    size_t start = 0;
    int line_no = 0;
    while (start < text->size()) {
      size_t end = text->find('\n', start);
      const bool terminated = end != std::string::npos;
      if (!terminated) end = text->size();
      std::string_view line(text->data() + start, end - start);
      start = end + 1;
      ++line_no;
      nlohmann::json event = nlohmann::json::parse(line, nullptr, false);
      if (event.is_discarded() || !event.is_object()) {
        // A write cut short by a crash was never acknowledged.
        if (!terminated) break;
        return absl::DataLossError(
            absl::StrCat(path.string(), ":", line_no, ": corrupt event"));
      }
      const std::string type = event.value("type", "");
      if (type == "created") {
        session.session_id = event.value("session_id", "");
        session.participant_id = event.value("participant_id", "");
        session.study_id = event.value("study_id", "");
      } else if (type == "consent") {
        session.consent = true;
      } else if (type == "answer") {
        std::optional<Label> label = ParseLabel(event.value("label", ""));
        const int index = event.value("index", -1);
        if (!label || index != session.cursor()) {
          return absl::DataLossError(
              absl::StrCat(path.string(), ":", line_no, ": bad answer"));
        }
        session.answers.push_back({index, *label, event.value("ts", 0LL)});
      } else {
        return absl::DataLossError(absl::StrCat(
            path.string(), ":", line_no, ": unknown event '", type, "'"));
      }
    }
    if (session.session_id.empty()) continue;  // creation never completed
    if (!studies_.contains(session.study_id)) {
      return absl::DataLossError(absl::StrCat(
          path.string(), ": session refers to unknown study ",
          session.study_id));
    }
    std::string id = session.session_id;
    sessions_[id] = std::move(slot);
  }
  return absl::OkStatus();
}

absl::Status SessionStore::AppendEvent(const std::string& session_id,
                                       const ordered_json& event) const {
  return AppendLineDurable(data_dir_ / "sessions" / (session_id + ".jsonl"),
                           event.dump());
}

SessionStore::SessionSlot* SessionStore::FindSlot(
    const std::string& session_id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

absl::StatusOr<std::string> SessionStore::PublishStudy(
    const StudyDefinition& study) {
  if (!IsSafeId(study.study_id)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad study id '", study.study_id, "'"));
  }
  if (study.questions.empty()) {
    return absl::InvalidArgumentError("study has no questions");
  }
  const std::string text = StudyToJson(study).dump(2) + "\n";
  std::unique_lock lock(mu_);
  if (auto it = studies_.find(study.study_id); it != studies_.end()) {
    if (StudyToJson(*it->second).dump(2) + "\n" == text) return study.study_id;
    return absl::AlreadyExistsError(absl::StrCat(
        "study ", study.study_id, " is already published with other content"));
  }
  if (absl::Status s = WriteFileAtomic(
          data_dir_ / "studies" / (study.study_id + ".json"), text);
      !s.ok()) {
    return s;
  }
  studies_[study.study_id] = std::make_unique<StudyDefinition>(study);
  return study.study_id;
}

const StudyDefinition* SessionStore::FindStudy(
    const std::string& study_id) const {
  std::shared_lock lock(mu_);
  auto it = studies_.find(study_id);
  return it == studies_.end() ? nullptr : it->second.get();
}

absl::StatusOr<std::string> SessionStore::CreateSession(
    const std::string& participant_id, const std::string& study_id) {
  if (participant_id.empty()) {
    return absl::InvalidArgumentError("participant_id is required");
  }
  if (FindStudy(study_id) == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown study ", study_id));
  }
  auto slot = std::make_unique<SessionSlot>();
  slot->session.participant_id = participant_id;
  slot->session.study_id = study_id;
  std::unique_lock lock(mu_);
  std::string id;
  do {
    id = NewSessionId();
  } while (sessions_.contains(id));
  slot->session.session_id = id;
  if (absl::Status s = AppendEvent(id, {{"type", "created"},
                                        {"session_id", id},
                                        {"participant_id", participant_id},
                                        {"study_id", study_id},
                                        {"ts", NowMs()}});
      !s.ok()) {
    return s;
  }
  sessions_[id] = std::move(slot);
  return id;
}

absl::Status SessionStore::AcknowledgeConsent(const std::string& session_id) {
  SessionSlot* slot = FindSlot(session_id);
  if (slot == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown session ", session_id));
  }
  std::lock_guard<std::mutex> lock(slot->mu);
  if (slot->session.consent) return absl::OkStatus();
  if (absl::Status s =
          AppendEvent(session_id, {{"type", "consent"}, {"ts", NowMs()}});
      !s.ok()) {
    return s;
  }
  slot->session.consent = true;
  return absl::OkStatus();
}

absl::StatusOr<ordered_json> SessionStore::CurrentQuestion(
    const std::string& session_id) const {
  SessionSlot* slot = FindSlot(session_id);
  if (slot == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown session ", session_id));
  }
  std::lock_guard<std::mutex> lock(slot->mu);
  if (!slot->session.consent) {
    return absl::PermissionDeniedError("consent has not been acknowledged");
  }
  const StudyDefinition* study = FindStudy(slot->session.study_id);
  const int cursor = slot->session.cursor();
  if (cursor >= static_cast<int>(study->questions.size())) {
    return ordered_json{{"done", true}};
  }
  return QuestionPayload(*study, cursor);
}

absl::Status SessionStore::RecordAnswer(const std::string& session_id,
                                        int index, Label label) {
  SessionSlot* slot = FindSlot(session_id);
  if (slot == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown session ", session_id));
  }
  std::lock_guard<std::mutex> lock(slot->mu);
  StudySession& session = slot->session;
  if (!session.consent) {
    return absl::PermissionDeniedError("consent has not been acknowledged");
  }
  const StudyDefinition* study = FindStudy(session.study_id);
  if (session.cursor() >= static_cast<int>(study->questions.size())) {
    return absl::FailedPreconditionError("session is already complete");
  }
  if (index != session.cursor()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "answer for question ", index, " but the session is at question ",
        session.cursor()));
  }
  const int64_t ts = NowMs();
  if (absl::Status s = AppendEvent(session_id,
                                   {{"type", "answer"},
                                    {"index", index},
                                    {"label", std::string(LabelName(label))},
                                    {"ts", ts}});
      !s.ok()) {
    return s;
  }
  session.answers.push_back({index, label, ts});
  return absl::OkStatus();
}

absl::StatusOr<StudySession> SessionStore::GetSession(
    const std::string& session_id) const {
  SessionSlot* slot = FindSlot(session_id);
  if (slot == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown session ", session_id));
  }
  std::lock_guard<std::mutex> lock(slot->mu);
  return slot->session;
}

std::vector<StudySession> SessionStore::SessionsForStudy(
    const std::string& study_id) const {
  std::vector<SessionSlot*> slots;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, slot] : sessions_) slots.push_back(slot.get());
  }
  std::vector<StudySession> out;
  for (SessionSlot* slot : slots) {
    std::lock_guard<std::mutex> lock(slot->mu);
    if (slot->session.study_id == study_id) out.push_back(slot->session);
  }
  return out;
}

absl::StatusOr<ordered_json> SessionStore::Results(
    const std::string& study_id) const {
  const StudyDefinition* study = FindStudy(study_id);
  if (study == nullptr) {
    return absl::NotFoundError(absl::StrCat("unknown study ", study_id));
  }
  std::vector<StudySession> complete;
  std::vector<std::string> incomplete;
  for (StudySession& s : SessionsForStudy(study_id)) {
    if (s.cursor() == static_cast<int>(study->questions.size())) {
      complete.push_back(std::move(s));
    } else {
      incomplete.push_back(s.session_id);
    }
  }
  absl::StatusOr<StudyResults> results = ScoreStudy(complete, *study);
  if (!results.ok()) return results.status();
  ordered_json j = ResultsToJson(*results);
  j["incomplete_sessions"] = incomplete;
  return j;
}

StudyServer::StudyServer(SessionStore& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  RegisterRoutes();
}

StudyServer::~StudyServer() = default;

void StudyServer::RegisterRoutes() {
  httplib::Server& s = *server_;
  s.Post("/studies", [this](const httplib::Request& req,
                            httplib::Response& res) {
    absl::StatusOr<nlohmann::json> body = ParseBody(req);
    if (!body.ok()) return SendError(res, body.status());
    absl::StatusOr<StudyDefinition> study = StudyFromJson(*body);
    if (!study.ok()) return SendError(res, study.status());
    absl::StatusOr<std::string> id = store_.PublishStudy(*study);
    if (!id.ok()) return SendError(res, id.status());
    SendJson(res, 200, {{"study_id", *id}});
  });
  s.Post("/sessions", [this](const httplib::Request& req,
                             httplib::Response& res) {
    absl::StatusOr<nlohmann::json> body = ParseBody(req);
    if (!body.ok()) return SendError(res, body.status());
    if (!(*body)["participant_id"].is_string() ||
        !(*body)["study_id"].is_string()) {
      return SendError(res, absl::InvalidArgumentError(
                                "expected {participant_id, study_id}"));
    }
    absl::StatusOr<std::string> id = store_.CreateSession(
        (*body)["participant_id"].get<std::string>(),
        (*body)["study_id"].get<std::string>());
    if (!id.ok()) return SendError(res, id.status());
    SendJson(res, 200, {{"session_id", *id}});
  });
  s.Post(R"(/sessions/([^/]+)/consent)",
         [this](const httplib::Request& req, httplib::Response& res) {
           absl::Status status = store_.AcknowledgeConsent(req.matches[1]);
           if (!status.ok()) return SendError(res, status);
           SendJson(res, 200, {{"ok", true}});
         });
  s.Get(R"(/sessions/([^/]+)/question)",
        [this](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<ordered_json> question =
              store_.CurrentQuestion(req.matches[1]);
          if (!question.ok()) return SendError(res, question.status());
          SendJson(res, 200, *question);
        });
  s.Post(R"(/sessions/([^/]+)/answer)",
         [this](const httplib::Request& req, httplib::Response& res) {
           absl::StatusOr<nlohmann::json> body = ParseBody(req);
           if (!body.ok()) return SendError(res, body.status());
           const nlohmann::json& index = (*body)["index"];
           const nlohmann::json& label_text = (*body)["label"];
           if (!index.is_number_integer() || !label_text.is_string()) {
             return SendError(
                 res, absl::InvalidArgumentError("expected {index, label}"));
           }
           std::optional<Label> label =
               ParseLabel(label_text.get<std::string>());
           if (!label) {
             return SendError(res,
                              absl::InvalidArgumentError("unknown label"));
           }
           const std::string id = req.matches[1];
           absl::Status status =
               store_.RecordAnswer(id, index.get<int>(), *label);
           if (!status.ok()) return SendError(res, status);
           absl::StatusOr<StudySession> session = store_.GetSession(id);
           if (!session.ok()) return SendError(res, session.status());
           SendJson(res, 200, {{"next_index", session->cursor()}});
         });
  s.Get(R"(/studies/([^/]+)/results)",
        [this](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<ordered_json> results =
              store_.Results(req.matches[1]);
          if (!results.ok()) return SendError(res, results.status());
          SendJson(res, 200, *results);
        });
}

bool StudyServer::Listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int StudyServer::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool StudyServer::Bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool StudyServer::ListenAfterBind() { return server_->listen_after_bind(); }

void StudyServer::Stop() { server_->stop(); }

void StudyServer::WaitUntilReady() { server_->wait_until_ready(); }

}  // namespace nlicheck
