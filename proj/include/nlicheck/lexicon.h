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

// Placeholder vocabularies and word-derivation tables.
//
// Lexicon files are UTF-8 text with one section per key:
//
//   # comment
//   [PROFESSION]
//   doctor
//   actor | article=an
//   [NAME]
//   Jim | gender=male
//   [MALE_NAME alias=NAME gender=male]
//   [N range=1..500]
//   [derivation:Antonym]
//   responsible -> irresponsible
//
// An alias section has no entries; it resolves to its base key, optionally
// filtered by one attribute. A range section declares an inclusive integer
// domain instead of a word list.

#ifndef NLICHECK_LEXICON_H_
#define NLICHECK_LEXICON_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace nlicheck {

struct LexiconEntry {
  std::string surface;
  std::map<std::string, std::string> attributes;

  // Empty string when the attribute is absent.
  std::string_view Attribute(std::string_view name) const;

  bool operator==(const LexiconEntry&) const = default;
};

struct NumericRange {
  int64_t lo = 0;
  int64_t hi = 0;

  int64_t Size() const { return hi >= lo ? hi - lo + 1 : 0; }
  bool operator==(const NumericRange&) const = default;
};

struct AttributeFilter {
  std::string name;
  std::string value;

  bool Matches(const LexiconEntry& entry) const {
    return entry.Attribute(name) == value;
  }
  bool operator==(const AttributeFilter&) const = default;
};

struct KeyAlias {
  std::string base;
  std::optional<AttributeFilter> filter;

  bool operator==(const KeyAlias&) const = default;
};

// Derivations computed from the word itself rather than a table.
inline constexpr std::string_view kCapitalizeDerivation = "Capitalize";

// Immutable after loading; safe to share across threads for reading.
class LexiconStore {
 public:
  using DerivationTable = std::map<std::string, std::vector<std::string>>;

  LexiconStore() = default;

  bool HasKey(std::string_view key) const;
  bool IsNumeric(std::string_view key) const;
  std::optional<NumericRange> Range(std::string_view key) const;

  // Entries of `key` (aliases resolved) that pass `filter`, in stored order.
  absl::StatusOr<std::vector<LexiconEntry>> Lookup(
      std::string_view key,
      const std::optional<AttributeFilter>& filter = std::nullopt) const;

  bool HasDerivation(std::string_view function) const;
  // Every recorded derivation of `word` under `function`; empty when the word
  // has no entry.
  absl::StatusOr<std::vector<std::string>> Derive(std::string_view function,
                                                  std::string_view word) const;

  // Sorted names of word-list, range and alias keys.
  std::vector<std::string> KeyNames() const;
  std::vector<std::string> DerivationNames() const;

  const std::map<std::string, std::vector<LexiconEntry>>& lists() const {
    return lists_;
  }
  const std::map<std::string, NumericRange>& ranges() const { return ranges_; }
  const std::map<std::string, KeyAlias>& aliases() const { return aliases_; }
  const std::map<std::string, DerivationTable>& derivations() const {
    return derivations_;
  }

  bool operator==(const LexiconStore& other) const {
    return lists_ == other.lists_ && ranges_ == other.ranges_ &&
           aliases_ == other.aliases_ && derivations_ == other.derivations_;
  }

 private:
  friend class LexiconBuilder;

  std::map<std::string, std::vector<LexiconEntry>> lists_;
  std::map<std::string, NumericRange> ranges_;
  std::map<std::string, KeyAlias> aliases_;
  std::map<std::string, DerivationTable> derivations_;
};

// Loads every `*.lex` file under `path` (or `path` itself if it is a file),
// in filename order. A key or derivation defined in two files is a conflict.
absl::StatusOr<LexiconStore> LoadLexicons(const std::filesystem::path& path);

// Parses a single lexicon document; `source_name` is used in error messages.
absl::StatusOr<LexiconStore> ParseLexicon(std::string_view text,
                                          std::string_view source_name);

// Normalizes a key name: spaces become underscores. Returns nullopt when the
// result is not an uppercase identifier.
std::optional<std::string> NormalizeKeyName(std::string_view name);

// "a" or "an" for the word, using the vowel-initial heuristic with an
// exception list (hour, honest, university, one, ...).
std::string_view SelectArticle(std::string_view word);
// As above, but an explicit `article` attribute wins.
std::string_view SelectArticle(const LexiconEntry& entry);

}  // namespace nlicheck

#endif  // NLICHECK_LEXICON_H_
