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

// Durable session state and the HTTP API participants talk to.
//
//   POST /studies                      studydef JSON -> {study_id}
//   POST /sessions                     {participant_id, study_id}
//                                      -> {session_id}
//   POST /sessions/{id}/consent        -> {ok}
//   GET  /sessions/{id}/question       -> {index, total, test_example, panel}
//                                         or {done: true}
//   POST /sessions/{id}/answer         {index, label} -> {next_index}
//   GET  /studies/{id}/results         -> StudyResults of complete sessions
//
// Data directory layout:
//   studies/<study-id>.json
//   sessions/<session-id>.jsonl        append-only event journal

#ifndef NLICHECK_STUDY_SERVICE_H_
#define NLICHECK_STUDY_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlicheck/study.h"
#include "nlohmann/json.hpp"

namespace httplib {
class Server;
}

namespace nlicheck {

class SessionStore {
 public:
  // Creates the layout if missing and replays every journal.
  static absl::StatusOr<std::unique_ptr<SessionStore>> Open(
      const std::filesystem::path& data_dir);

  // Studies are immutable once published; republishing an identical
  // definition is a no-op, a different one under the same id is an error.
  absl::StatusOr<std::string> PublishStudy(const StudyDefinition& study);
  const StudyDefinition* FindStudy(const std::string& study_id) const;

  absl::StatusOr<std::string> CreateSession(const std::string& participant_id,
                                            const std::string& study_id);
  absl::Status AcknowledgeConsent(const std::string& session_id);
  // {index, total, test_example, panel} or {done: true}.
  absl::StatusOr<nlohmann::ordered_json> CurrentQuestion(
      const std::string& session_id) const;
  // Accepted only for index == cursor, after consent. Journalled before
  // returning.
  absl::Status RecordAnswer(const std::string& session_id, int index,
                            Label label);

  absl::StatusOr<StudySession> GetSession(const std::string& session_id) const;
  std::vector<StudySession> SessionsForStudy(const std::string& study_id) const;

  // Scores the study's complete sessions; incomplete ones are listed.
  absl::StatusOr<nlohmann::ordered_json> Results(
      const std::string& study_id) const;

 private:
  struct SessionSlot {
    mutable std::mutex mu;
    StudySession session;
  };

  explicit SessionStore(std::filesystem::path data_dir);
  absl::Status Replay();
  absl::Status AppendEvent(const std::string& session_id,
                           const nlohmann::ordered_json& event) const;
  SessionSlot* FindSlot(const std::string& session_id) const;

  std::filesystem::path data_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::unique_ptr<StudyDefinition>> studies_;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions_;
};

class StudyServer {
 public:
  explicit StudyServer(SessionStore& store);
  ~StudyServer();

  // Blocks until Stop().
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port; returns it, or -1.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady();

 private:
  void RegisterRoutes();

  SessionStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace nlicheck

#endif  // NLICHECK_STUDY_SERVICE_H_
