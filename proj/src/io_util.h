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

// File and RNG helpers shared by the persistence modules.

#ifndef NLICHECK_SRC_IO_UTIL_H_
#define NLICHECK_SRC_IO_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace nlicheck {

absl::StatusOr<std::string> ReadFile(const std::filesystem::path& path);

// Writes via a temporary file in the same directory and renames it into
// place, so readers never observe a partial file.
absl::Status WriteFileAtomic(const std::filesystem::path& path,
                             std::string_view contents);

// Appends one line and fsyncs before returning.
absl::Status AppendLineDurable(const std::filesystem::path& path,
                               std::string_view line);

// Advisory exclusive lock held by creating `path` with O_EXCL.
class FileLock {
 public:
  static absl::StatusOr<FileLock> Acquire(std::filesystem::path path);
  FileLock(FileLock&& other) noexcept : path_(std::move(other.path_)) {
    other.path_.clear();
  }
  FileLock& operator=(FileLock&&) = delete;
  ~FileLock();

 private:
  explicit FileLock(std::filesystem::path path) : path_(std::move(path)) {}
  std::filesystem::path path_;
};

// Fisher-Yates with an explicit draw so results do not depend on the
// standard library's shuffle implementation.
template <typename T>
void SeededShuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = rng() % i;
    std::swap(items[i - 1], items[j]);
  }
}

std::string CsvEscape(std::string_view field);
// RFC 4180 records; quoted fields may contain commas, quotes and newlines.
absl::StatusOr<std::vector<std::vector<std::string>>> ParseCsv(
    std::string_view text);

}  // namespace nlicheck

#endif  // NLICHECK_SRC_IO_UTIL_H_
