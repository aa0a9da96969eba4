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

#include "nlicheck/lexicon.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "string_compat.h"

namespace nlicheck {

std::string_view LexiconEntry::Attribute(std::string_view name) const {
  auto it = attributes.find(std::string(name));
  if (it == attributes.end()) return {};
  return it->second;
}

std::optional<std::string> NormalizeKeyName(std::string_view name_in) {
  absl::string_view name = ToAbsl(name_in);
  std::string out;
  bool pending_space = false;
  for (char c : absl::StripAsciiWhitespace(name)) {
    if (c == ' ' || c == '\t') {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back('_');
    pending_space = false;
    if (absl::ascii_isupper(c) || absl::ascii_isdigit(c) || c == '_') {
      out.push_back(c);
    } else {
      return std::nullopt;
    }
  }
  // Trailing digits would read as a slot index in templates.
  if (out.empty() || !absl::ascii_isupper(out.front()) ||
      absl::ascii_isdigit(out.back())) {
    return std::nullopt;
  }
  return out;
}

namespace {

bool IsAttributeName(absl::string_view name) {
  if (name.empty() || !absl::ascii_islower(name.front())) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return absl::ascii_islower(c) || absl::ascii_isdigit(c) || c == '_';
  });
}

bool IsDerivationName(absl::string_view name) {
  if (name.empty() || !absl::ascii_isupper(name.front())) return false;
  return std::all_of(name.begin(), name.end(),
                     [](char c) { return absl::ascii_isalnum(c); });
}

absl::StatusOr<int64_t> ParseInt(absl::string_view text) {
  int64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return absl::InvalidArgumentError(absl::StrCat("bad integer '", text, "'"));
  }
  return value;
}

}  // namespace

// Accumulates sections from one or more files, tracking where each key came
// from so conflicts can name both sources.
class LexiconBuilder {
 public:
  absl::Status AddText(absl::string_view text, absl::string_view source) {
    enum class Mode { kNone, kList, kRange, kAlias, kDerivation };
    Mode mode = Mode::kNone;
    std::string current;
    int line_no = 0;
    for (absl::string_view raw : absl::StrSplit(text, '\n')) {
      ++line_no;
      auto error = [&](absl::string_view message) {
        return absl::InvalidArgumentError(
            absl::StrCat(source, ":", line_no, ": ", message));
      };
      absl::string_view line = absl::StripAsciiWhitespace(raw);
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') return error("unterminated section header");
        absl::string_view inner = line.substr(1, line.size() - 2);
        if (absl::ConsumePrefix(&inner, "derivation:")) {
          std::string name(absl::StripAsciiWhitespace(inner));
          if (!IsDerivationName(name)) {
            return error(absl::StrCat("bad derivation name '", name, "'"));
          }
          if (name == kCapitalizeDerivation) {
            return error("Capitalize is built in and cannot be redefined");
          }
          if (auto it = sources_.find("derivation:" + name);
              it != sources_.end()) {
            return absl::AlreadyExistsError(
                absl::StrCat("derivation ", name, " defined in both ",
                             it->second, " and ", source));
          }
          sources_["derivation:" + name] = std::string(source);
          store_.derivations_[name];
          current = name;
          mode = Mode::kDerivation;
          continue;
        }
        std::vector<std::string> name_parts;
        std::map<std::string, std::string> options;
        for (absl::string_view token :
             absl::StrSplit(inner, absl::ByAnyChar(" \t"), absl::SkipEmpty())) {
          size_t eq = token.find('=');
          if (eq == absl::string_view::npos) {
            if (!options.empty()) {
              return error(absl::StrCat("unexpected '", token, "'"));
            }
            name_parts.emplace_back(token);
          } else {
            options[std::string(token.substr(0, eq))] =
                std::string(token.substr(eq + 1));
          }
        }
        std::optional<std::string> key =
            NormalizeKeyName(absl::StrJoin(name_parts, " "));
        if (!key) {
          return error(absl::StrCat("bad key name '", inner, "'"));
        }
        if (auto it = sources_.find(*key); it != sources_.end()) {
          return absl::AlreadyExistsError(absl::StrCat(
              "key ", *key, " defined in both ", it->second, " and ", source));
        }
        sources_[*key] = std::string(source);
        current = *key;
        if (auto range = options.find("range"); range != options.end()) {
          if (options.size() != 1) return error("range takes no other options");
          std::vector<absl::string_view> bounds =
              absl::StrSplit(range->second, "..");
          if (bounds.size() != 2) return error("range must be LO..HI");
          absl::StatusOr<int64_t> lo = ParseInt(bounds[0]);
          absl::StatusOr<int64_t> hi = ParseInt(bounds[1]);
          if (!lo.ok() || !hi.ok() || *lo > *hi) {
            return error(absl::StrCat("bad range '", range->second, "'"));
          }
          store_.ranges_[current] = NumericRange{*lo, *hi};
          mode = Mode::kRange;
        } else if (auto alias = options.find("alias"); alias != options.end()) {
          std::optional<std::string> base = NormalizeKeyName(alias->second);
          if (!base) return error("bad alias base");
          KeyAlias entry{*base, std::nullopt};
          options.erase(alias);
          if (options.size() > 1) return error("alias takes at most one filter");
          if (!options.empty()) {
            if (!IsAttributeName(options.begin()->first)) {
              return error("bad attribute name");
            }
            entry.filter =
                AttributeFilter{options.begin()->first, options.begin()->second};
          }
          store_.aliases_[current] = std::move(entry);
          mode = Mode::kAlias;
        } else {
          if (!options.empty()) {
            return error(absl::StrCat("unknown option '",
                                      options.begin()->first, "'"));
          }
          store_.lists_[current];
          mode = Mode::kList;
        }
        continue;
      }

      switch (mode) {
        case Mode::kNone:
          return error("entry outside of a section");
        case Mode::kRange:
        case Mode::kAlias:
          return error(absl::StrCat("section ", current, " takes no entries"));
        case Mode::kDerivation: {
          size_t arrow = line.find("->");
          if (arrow == absl::string_view::npos) return error("expected '->'");
          std::string word(absl::StripAsciiWhitespace(line.substr(0, arrow)));
          if (word.empty()) return error("empty derivation source");
          std::vector<std::string> derived;
          for (absl::string_view d :
               absl::StrSplit(line.substr(arrow + 2), ',')) {
            d = absl::StripAsciiWhitespace(d);
            if (d.empty()) return error("empty derived word");
            derived.emplace_back(d);
          }
          auto& table = store_.derivations_[current];
          if (table.contains(word)) {
            return error(absl::StrCat("duplicate derivation source '", word,
                                      "'"));
          }
          table[word] = std::move(derived);
          break;
        }
        case Mode::kList: {
          std::vector<absl::string_view> fields = absl::StrSplit(line, '|');
          LexiconEntry entry;
          entry.surface = std::string(absl::StripAsciiWhitespace(fields[0]));
          if (entry.surface.empty()) return error("empty surface");
          if (absl::StrContains(entry.surface, '{') ||
              absl::StrContains(entry.surface, '}')) {
            return error("surface contains a brace");
          }
          for (size_t i = 1; i < fields.size(); ++i) {
            absl::string_view field = absl::StripAsciiWhitespace(fields[i]);
            size_t eq = field.find('=');
            if (eq == absl::string_view::npos) {
              return error(absl::StrCat("expected attr=value, got '", field,
                                        "'"));
            }
            std::string name(absl::StripAsciiWhitespace(field.substr(0, eq)));
            if (!IsAttributeName(name)) {
              return error(absl::StrCat("bad attribute name '", name, "'"));
            }
            entry.attributes[name] =
                std::string(absl::StripAsciiWhitespace(field.substr(eq + 1)));
          }
          if (auto article = entry.attributes.find("article");
              article != entry.attributes.end() && article->second != "a" &&
              article->second != "an") {
            return error("article must be a or an");
          }
          auto& list = store_.lists_[current];
          for (const LexiconEntry& existing : list) {
            if (existing.surface == entry.surface) {
              return error(absl::StrCat("duplicate surface '", entry.surface,
                                        "' in ", current));
            }
          }
          list.push_back(std::move(entry));
          break;
        }
      }
    }
    return absl::OkStatus();
  }

  absl::StatusOr<LexiconStore> Finish() && {
    for (const auto& [name, alias] : store_.aliases_) {
      if (!store_.lists_.contains(alias.base)) {
        return absl::InvalidArgumentError(
            absl::StrCat(sources_[name], ": alias ", name,
                         " refers to unknown word-list key ", alias.base));
      }
    }
    return std::move(store_);
  }

 private:
  LexiconStore store_;
  std::map<std::string, std::string> sources_;
};

absl::StatusOr<LexiconStore> ParseLexicon(std::string_view text,
                                          std::string_view source_name) {
  LexiconBuilder builder;
  if (absl::Status s = builder.AddText(ToAbsl(text), ToAbsl(source_name)); !s.ok()) return s;
  return std::move(builder).Finish();
}

absl::StatusOr<LexiconStore> LoadLexicons(const std::filesystem::path& path) {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path, ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(path, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".lex") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) {
                return a.filename() < b.filename();
              });
  } else if (std::filesystem::is_regular_file(path, ec)) {
    files.push_back(path);
  } else {
    return absl::NotFoundError(
        absl::StrCat("lexicon path not found: ", path.string()));
  }
  LexiconBuilder builder;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      return absl::NotFoundError(absl::StrCat("cannot read ", file.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    if (absl::Status s = builder.AddText(buffer.str(), file.filename().string());
        !s.ok()) {
      return s;
    }
  }
  return std::move(builder).Finish();
}

bool LexiconStore::HasKey(std::string_view key) const {
  std::string k(key);
  return lists_.contains(k) || ranges_.contains(k) || aliases_.contains(k);
}

bool LexiconStore::IsNumeric(std::string_view key) const {
  return ranges_.contains(std::string(key));
}

std::optional<NumericRange> LexiconStore::Range(std::string_view key) const {
  auto it = ranges_.find(std::string(key));
  if (it == ranges_.end()) return std::nullopt;
  return it->second;
}

absl::StatusOr<std::vector<LexiconEntry>> LexiconStore::Lookup(
    std::string_view key_in, const std::optional<AttributeFilter>& filter) const {
  absl::string_view key = ToAbsl(key_in);
  std::string k(key);
  std::optional<AttributeFilter> alias_filter;
  if (auto alias = aliases_.find(k); alias != aliases_.end()) {
    alias_filter = alias->second.filter;
    k = alias->second.base;
  }
  auto it = lists_.find(k);
  if (it == lists_.end()) {
    if (ranges_.contains(k)) {
      return absl::InvalidArgumentError(
          absl::StrCat("key ", key, " is numeric and has no word list"));
    }
    return absl::NotFoundError(absl::StrCat("unknown lexicon key ", key));
  }
  std::vector<LexiconEntry> out;
  for (const LexiconEntry& entry : it->second) {
    if (alias_filter && !alias_filter->Matches(entry)) continue;
    if (filter && !filter->Matches(entry)) continue;
    out.push_back(entry);
  }
  return out;
}

bool LexiconStore::HasDerivation(std::string_view function) const {
  return function == kCapitalizeDerivation ||
         derivations_.contains(std::string(function));
}

absl::StatusOr<std::vector<std::string>> LexiconStore::Derive(
    std::string_view function_in, std::string_view word) const {
  absl::string_view function = ToAbsl(function_in);
  if (function_in == kCapitalizeDerivation) {
    std::string out(word);
    if (!out.empty()) out[0] = absl::ascii_toupper(out[0]);
    return std::vector<std::string>{out};
  }
  auto table = derivations_.find(std::string(function));
  if (table == derivations_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown derivation ", function));
  }
  auto it = table->second.find(std::string(word));
  if (it == table->second.end()) return std::vector<std::string>{};
  return it->second;
}

std::vector<std::string> LexiconStore::KeyNames() const {
  std::set<std::string> names;
  for (const auto& [k, v] : lists_) names.insert(k);
  for (const auto& [k, v] : ranges_) names.insert(k);
  for (const auto& [k, v] : aliases_) names.insert(k);
  return {names.begin(), names.end()};
}

std::vector<std::string> LexiconStore::DerivationNames() const {
  std::set<std::string> names{std::string(kCapitalizeDerivation)};
  for (const auto& [k, v] : derivations_) names.insert(k);
  return {names.begin(), names.end()};
}

namespace {

constexpr absl::string_view kAnPrefixes[] = {"hour", "honest", "honor",
                                            "honour", "heir"};
constexpr absl::string_view kAWords[] = {
    "university", "unicorn", "uniform", "unique", "union",  "unit",
    "user",       "useful",  "usual",   "utensil", "european", "one",
    "once",       "ewe",     "utopia",  "uranium", "unanimous", "usage",
    "utility",    "ufo",     "eucalyptus", "euphemism", "ukulele"};

bool MatchesWord(absl::string_view word, absl::string_view listed) {
  if (!absl::StartsWith(word, listed)) return false;
  absl::string_view rest = word.substr(listed.size());
  return rest.empty() || rest == "s" || rest == "es" ||
         !absl::ascii_isalpha(rest.front());
}

}  // namespace

std::string_view SelectArticle(std::string_view word_in) {
  absl::string_view word = absl::StripAsciiWhitespace(ToAbsl(word_in));
  std::string first;
  for (char c : word) {
    if (c == ' ' || c == '-') break;
    first.push_back(absl::ascii_tolower(c));
  }
  if (first.empty()) return "a";
  if (absl::ascii_isdigit(first.front())) {
    size_t digits = 0;
    while (digits < first.size() && absl::ascii_isdigit(first[digits])) {
      ++digits;
    }
    // "eight...", "eleven...", "eighteen..." in spoken groups of three.
    if (first.front() == '8') return "an";
    if (digits % 3 == 2 &&
        (absl::StartsWith(first, "11") || absl::StartsWith(first, "18"))) {
      return "an";
    }
    return "a";
  }
  for (absl::string_view prefix : kAnPrefixes) {
    if (absl::StartsWith(first, prefix)) return "an";
  }
  for (absl::string_view listed : kAWords) {
    if (MatchesWord(first, listed)) return "a";
  }
  if (absl::StartsWith(first, "euro")) return "a";
  switch (first.front()) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return "an";
    default:
      return "a";
  }
}

std::string_view SelectArticle(const LexiconEntry& entry) {
  std::string_view explicit_article = entry.Attribute("article");
  if (explicit_article == "a") return "a";
  if (explicit_article == "an") return "an";
  return SelectArticle(entry.surface);
}

}  // namespace nlicheck
