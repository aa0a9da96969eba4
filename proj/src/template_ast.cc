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

#include "nlicheck/template_ast.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/cord.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "string_compat.h"
#include "nlicheck/lexicon.h"

namespace nlicheck {

namespace {

constexpr absl::string_view kOffsetPayload = "type.nlicheck/error_offset";

absl::Status ErrorAt(size_t offset, absl::string_view message) {
  absl::Status status = absl::InvalidArgumentError(
      absl::StrCat(message, " (at byte ", offset, ")"));
  status.SetPayload(kOffsetPayload, absl::Cord(absl::StrCat(offset)));
  return status;
}

bool IsLowerIdent(absl::string_view s) {
  if (s.empty() || !absl::ascii_islower(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return absl::ascii_islower(c) || absl::ascii_isdigit(c) || c == '_';
  });
}

bool IsFunctionName(absl::string_view s) {
  if (s.empty() || !absl::ascii_isupper(s.front())) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return absl::ascii_isalnum(c); });
}

std::string FormatConfidence(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  std::string out(buf, ptr);
  if (out.find_first_of(".en") == std::string::npos) out += ".0";
  return out;
}

std::string Quote(absl::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Parses KEY, KEY<n> or KEY@var. `rep_var` is the enclosing repetition
// variable, if any.
std::optional<SlotRef> ParseRefText(absl::string_view text,
                                    const std::string* rep_var) {
  text = absl::StripAsciiWhitespace(text);
  SlotRef ref;
  if (size_t at = text.find('@'); at != absl::string_view::npos) {
    absl::string_view var = text.substr(at + 1);
    if (!IsLowerIdent(var)) return std::nullopt;
    if (rep_var == nullptr || *rep_var != var) return std::nullopt;
    std::optional<std::string> key = NormalizeKeyName(ToStd(text.substr(0, at)));
    if (!key) return std::nullopt;
    ref.key = *key;
    ref.rep_var = std::string(var);
    return ref;
  }
  size_t digits = text.size();
  while (digits > 0 && absl::ascii_isdigit(text[digits - 1])) --digits;
  std::optional<std::string> key = NormalizeKeyName(ToStd(text.substr(0, digits)));
  if (!key) return std::nullopt;
  ref.key = *key;
  if (digits < text.size()) {
    int index = 0;
    if (!absl::SimpleAtoi(text.substr(digits), &index)) return std::nullopt;
    ref.index = index;
  }
  return ref;
}

std::optional<std::string> ParseCountText(absl::string_view text) {
  text = absl::StripAsciiWhitespace(text);
  if (!absl::ConsumePrefix(&text, "count(") ||
      !absl::ConsumeSuffix(&text, ")")) {
    return std::nullopt;
  }
  if (!IsLowerIdent(text)) return std::nullopt;
  return std::string(text);
}

class RecordParser {
 public:
  RecordParser(absl::string_view src, const CapabilityRegistry& registry)
      : src_(src), registry_(registry) {}

  absl::StatusOr<TemplateAst> Parse() {
    size_t b = 0;
    size_t e = src_.size();
    while (b < e && absl::ascii_isspace(src_[b])) ++b;
    while (e > b && absl::ascii_isspace(src_[e - 1])) --e;
    if (src_.substr(b, 2) != "P:") {
      return ErrorAt(b, "record must start with 'P:'");
    }
    const size_t p0 = b + 2;
    absl::StatusOr<size_t> h = FindTopLevel(p0, e, " H:");
    if (!h.ok()) return h.status();
    if (*h == absl::string_view::npos) {
      return ErrorAt(p0, "missing ' H:' after the premise");
    }
    const size_t premise_begin = (p0 < *h && src_[p0] == ' ') ? p0 + 1 : p0;
    const size_t h0 = *h + 3;
    absl::StatusOr<size_t> bar = FindTopLevel(h0, e, "|");
    if (!bar.ok()) return bar.status();
    if (*bar == absl::string_view::npos) {
      return ErrorAt(h0, "missing '| label:' after the hypothesis");
    }
    if (*bar == h0 || src_[*bar - 1] != ' ') {
      return ErrorAt(*bar, "expected ' | ' before the record fields");
    }
    const size_t hyp_end = *bar - 1;
    const size_t hyp_begin =
        (h0 < hyp_end && src_[h0] == ' ') ? h0 + 1 : h0;

    TemplateAst ast;
    absl::StatusOr<std::vector<Slot>> premise =
        ParseSegment(premise_begin, *h, nullptr);
    if (!premise.ok()) return premise.status();
    ast.premise = *std::move(premise);
    absl::StatusOr<std::vector<Slot>> hypothesis =
        ParseSegment(hyp_begin, hyp_end, nullptr);
    if (!hypothesis.ok()) return hypothesis.status();
    ast.hypothesis = *std::move(hypothesis);

    if (absl::Status s = ParseFields(*bar, e, ast); !s.ok()) return s;
    if (absl::Status s = CheckStructure(ast); !s.ok()) return s;
    return ast;
  }

 private:
  bool RepAt(size_t i) const { return src_.substr(i, 5) == "[rep "; }

  // One past the end of the construct starting at i.
  absl::StatusOr<size_t> SkipConstruct(size_t i) const {
    if (src_[i] == '{') {
      for (size_t j = i + 1; j < src_.size(); ++j) {
        if (src_[j] == '}') return j + 1;
        if (src_[j] == '{') return ErrorAt(j, "nested '{'");
      }
      return ErrorAt(i, "unbalanced '{'");
    }
    if (src_[i] == '}') return ErrorAt(i, "unbalanced '}'");
    if (!RepAt(i)) return i + 1;
    size_t j = i + 5;
    bool quoted = false;
    for (; j < src_.size(); ++j) {
      char c = src_[j];
      if (quoted) {
        if (c == '\\') {
          ++j;
        } else if (c == '"') {
          quoted = false;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ':') {
        break;
      } else if (c == ']') {
        return ErrorAt(i, "repetition block without ':'");
      }
    }
    if (j >= src_.size()) return ErrorAt(i, "unterminated repetition block");
    for (size_t k = j + 1; k < src_.size();) {
      if (src_[k] == ']') return k + 1;
      if (RepAt(k)) return ErrorAt(k, "nested repetition block");
      if (src_[k] == '{' || src_[k] == '}') {
        absl::StatusOr<size_t> next = SkipConstruct(k);
        if (!next.ok()) return next.status();
        k = *next;
      } else {
        ++k;
      }
    }
    return ErrorAt(i, "unterminated repetition block");
  }

  absl::StatusOr<size_t> FindTopLevel(size_t from, size_t to,
                                      absl::string_view token) const {
    size_t i = from;
    while (i < to) {
      if (src_.substr(i, token.size()) == token) return i;
      if (src_[i] == '{' || src_[i] == '}' || RepAt(i)) {
        absl::StatusOr<size_t> next = SkipConstruct(i);
        if (!next.ok()) return next.status();
        i = *next;
      } else {
        ++i;
      }
    }
    return absl::string_view::npos;
  }

  absl::StatusOr<std::vector<Slot>> ParseSegment(size_t begin, size_t end,
                                                 const std::string* rep_var) {
    std::vector<Slot> slots;
    size_t literal_start = begin;
    auto flush = [&](size_t upto) {
      if (upto > literal_start) {
        Slot slot;
        slot.kind = SlotKind::kLiteral;
        slot.text = std::string(src_.substr(literal_start, upto - literal_start));
        slot.offset = literal_start;
        slots.push_back(std::move(slot));
      }
    };
    size_t i = begin;
    while (i < end) {
      char c = src_[i];
      if (c == '{') {
        absl::StatusOr<size_t> next = SkipConstruct(i);
        if (!next.ok()) return next.status();
        if (*next > end) return ErrorAt(i, "unbalanced '{'");
        flush(i);
        absl::StatusOr<Slot> slot = ParseBrace(i, *next - 1, rep_var);
        if (!slot.ok()) return slot.status();
        slots.push_back(*std::move(slot));
        i = *next;
        literal_start = i;
      } else if (RepAt(i)) {
        if (rep_var != nullptr) return ErrorAt(i, "nested repetition block");
        absl::StatusOr<size_t> next = SkipConstruct(i);
        if (!next.ok()) return next.status();
        if (*next > end) return ErrorAt(i, "unterminated repetition block");
        flush(i);
        absl::StatusOr<Slot> slot = ParseRep(i, *next);
        if (!slot.ok()) return slot.status();
        slots.push_back(*std::move(slot));
        i = *next;
        literal_start = i;
      } else if (c == '}') {
        return ErrorAt(i, "unbalanced '}'");
      } else if (c == '|') {
        return ErrorAt(i, "'|' is reserved for record fields");
      } else {
        ++i;
      }
    }
    flush(end);
    return slots;
  }

  absl::StatusOr<Slot> ParseBranch(absl::string_view text, size_t offset,
                                   const std::string* rep_var) {
    if (absl::StrContains(text, '(')) return ParseDerivation(text, offset, rep_var);
    if (std::optional<SlotRef> ref = ParseRefText(text, rep_var)) {
      Slot slot;
      slot.kind = SlotKind::kPlaceholder;
      slot.ref = *ref;
      slot.offset = offset;
      return slot;
    }
    if (text.empty()) return ErrorAt(offset, "empty alternation branch");
    if (absl::StrContains(text, '@')) {
      return ErrorAt(offset, "KEY@var outside its repetition block");
    }
    Slot slot;
    slot.kind = SlotKind::kLiteral;
    slot.text = std::string(text);
    slot.offset = offset;
    return slot;
  }

  absl::StatusOr<Slot> ParseDerivation(absl::string_view text, size_t offset,
                                       const std::string* rep_var) {
    size_t paren = text.find('(');
    absl::string_view function = text.substr(0, paren);
    if (!IsFunctionName(function) || text.back() != ')') {
      return ErrorAt(offset, absl::StrCat("bad derivation '", text, "'"));
    }
    absl::string_view inner = text.substr(paren + 1, text.size() - paren - 2);
    std::optional<SlotRef> ref = ParseRefText(inner, rep_var);
    if (!ref) {
      return ErrorAt(offset,
                     absl::StrCat("bad derivation argument '", inner, "'"));
    }
    Slot slot;
    slot.kind = SlotKind::kDerivation;
    slot.function = std::string(function);
    slot.ref = *ref;
    slot.offset = offset;
    return slot;
  }

  absl::StatusOr<Slot> ParseBrace(size_t open, size_t close,
                                  const std::string* rep_var) {
    absl::string_view content = src_.substr(open + 1, close - open - 1);
    Slot slot;
    slot.offset = open;
    if (content == "a/an" || content == "A/An") {
      slot.kind = SlotKind::kArticle;
      slot.text = std::string(content);
      return slot;
    }
    if (std::optional<std::string> var = ParseCountText(content)) {
      slot.kind = SlotKind::kCountRef;
      slot.rep_var = *var;
      return slot;
    }
    static constexpr std::pair<absl::string_view, CompareOp> kOps[] = {
        {"\xE2\x89\xA4", CompareOp::kLessEqual},
        {"\xE2\x89\xA5", CompareOp::kGreaterEqual},
        {"<=", CompareOp::kLessEqual},
        {">=", CompareOp::kGreaterEqual},
        {"<", CompareOp::kLess},
        {">", CompareOp::kGreater},
        {"=", CompareOp::kEqual},
    };
    for (const auto& [spelling, op] : kOps) {
      size_t at = content.find(spelling);
      if (at == absl::string_view::npos) continue;
      std::optional<SlotRef> lhs = ParseRefText(content.substr(0, at), rep_var);
      if (!lhs) {
        return ErrorAt(open, "numeric constraint must start with a slot");
      }
      absl::string_view rhs_text =
          absl::StripAsciiWhitespace(content.substr(at + spelling.size()));
      NumericConstraint constraint;
      constraint.op = op;
      int64_t constant = 0;
      if (absl::SimpleAtoi(rhs_text, &constant)) {
        constraint.rhs = constant;
      } else if (std::optional<std::string> var = ParseCountText(rhs_text)) {
        constraint.rhs = CountRef{*var};
      } else if (std::optional<SlotRef> rhs = ParseRefText(rhs_text, rep_var)) {
        constraint.rhs = *rhs;
      } else {
        return ErrorAt(open, absl::StrCat("bad constraint operand '", rhs_text,
                                          "'"));
      }
      slot.kind = SlotKind::kNumeric;
      slot.ref = *lhs;
      slot.constraint = constraint;
      return slot;
    }
    absl::string_view body = content;
    if (size_t colon = content.find(':'); colon != absl::string_view::npos) {
      absl::string_view group = content.substr(0, colon);
      if (!IsLowerIdent(group)) {
        return ErrorAt(open, absl::StrCat("bad group id '", group, "'"));
      }
      slot.group = std::string(group);
      body = content.substr(colon + 1);
      if (!absl::StrContains(body, '/')) {
        return ErrorAt(open, "coordinated alternation needs two branches");
      }
    }
    if (absl::StrContains(body, '/')) {
      slot.kind = SlotKind::kAlternation;
      size_t branch_offset = open + 1 + (body.data() - content.data());
      for (absl::string_view branch : absl::StrSplit(body, '/')) {
        absl::StatusOr<Slot> parsed =
            ParseBranch(branch, branch_offset, rep_var);
        if (!parsed.ok()) return parsed.status();
        slot.branches.push_back(*std::move(parsed));
        branch_offset += branch.size() + 1;
      }
      return slot;
    }
    if (absl::StrContains(content, '(')) {
      absl::StatusOr<Slot> derivation =
          ParseDerivation(content, open, rep_var);
      if (!derivation.ok()) return derivation.status();
      return derivation;
    }
    if (std::optional<SlotRef> ref = ParseRefText(content, rep_var)) {
      slot.kind = SlotKind::kPlaceholder;
      slot.ref = *ref;
      return slot;
    }
    if (absl::StrContains(content, '@')) {
      return ErrorAt(open, "KEY@var outside its repetition block");
    }
    return ErrorAt(open, absl::StrCat("unknown construct '{", content, "}'"));
  }

  absl::StatusOr<Slot> ParseRep(size_t begin, size_t end) {
    Slot slot;
    slot.kind = SlotKind::kRepetition;
    slot.offset = begin;
    slot.separator = " ";
    size_t i = begin + 5;
    bool have_range = false;
    auto skip_spaces = [&] {
      while (i < end && src_[i] == ' ') ++i;
    };
    while (true) {
      skip_spaces();
      if (i >= end) return ErrorAt(begin, "unterminated repetition header");
      if (src_[i] == ':') break;
      size_t name_start = i;
      while (i < end && src_[i] != '=' && src_[i] != ' ' && src_[i] != ':') ++i;
      if (i >= end || src_[i] != '=') {
        return ErrorAt(name_start, "expected name=value in repetition header");
      }
      absl::string_view name = src_.substr(name_start, i - name_start);
      ++i;
      std::string value;
      if (i < end && src_[i] == '"') {
        ++i;
        bool closed = false;
        while (i < end) {
          char c = src_[i++];
          if (c == '\\' && i < end) {
            value.push_back(src_[i++]);
          } else if (c == '"') {
            closed = true;
            break;
          } else {
            value.push_back(c);
          }
        }
        if (!closed) return ErrorAt(name_start, "unterminated quoted value");
      } else {
        size_t value_start = i;
        while (i < end && src_[i] != ' ' && src_[i] != ':') ++i;
        value = std::string(src_.substr(value_start, i - value_start));
      }
      if (!have_range) {
        if (!IsLowerIdent(name) || name == "sep" || name == "last") {
          return ErrorAt(name_start,
                         "repetition header must start with var=LO..HI");
        }
        std::vector<absl::string_view> bounds = absl::StrSplit(value, "..");
        if (bounds.size() != 2 || !absl::SimpleAtoi(bounds[0], &slot.rep_lo) ||
            !absl::SimpleAtoi(bounds[1], &slot.rep_hi) || slot.rep_lo < 1 ||
            slot.rep_lo > slot.rep_hi || slot.rep_hi > 64) {
          return ErrorAt(name_start,
                         absl::StrCat("bad repetition range '", value, "'"));
        }
        slot.rep_var = std::string(name);
        have_range = true;
      } else if (name == "sep") {
        slot.separator = value;
      } else if (name == "last") {
        slot.last_separator = value;
      } else {
        return ErrorAt(name_start,
                       absl::StrCat("unknown repetition option '", name, "'"));
      }
    }
    if (!have_range) return ErrorAt(begin, "repetition block without range");
    size_t body_begin = i + 1;
    size_t body_end = end - 1;  // the closing ']'
    if (body_begin < body_end && src_[body_begin] == ' ') ++body_begin;
    absl::StatusOr<std::vector<Slot>> body =
        ParseSegment(body_begin, body_end, &slot.rep_var);
    if (!body.ok()) return body.status();
    slot.body = *std::move(body);
    return slot;
  }

  absl::Status ParseFields(size_t bar, size_t end, TemplateAst& ast) {
    bool have_label = false;
    bool have_cap = false;
    bool have_id = false;
    size_t start = bar + 1;
    while (start <= end) {
      size_t next = src_.find('|', start);
      if (next == absl::string_view::npos || next > end) next = end;
      absl::string_view field = src_.substr(start, next - start);
      size_t field_offset = start;
      field = absl::StripAsciiWhitespace(field);
      size_t colon = field.find(':');
      if (colon == absl::string_view::npos) {
        return ErrorAt(field_offset, "expected 'name: value' field");
      }
      absl::string_view name = absl::StripAsciiWhitespace(field.substr(0, colon));
      absl::string_view value =
          absl::StripAsciiWhitespace(field.substr(colon + 1));
      if (name == "label" && !have_label) {
        have_label = true;
        if (absl::Status s = ParseLabelField(value, field_offset, ast);
            !s.ok()) {
          return s;
        }
      } else if (name == "cap" && !have_cap) {
        have_cap = true;
        std::optional<Capability> capability = registry_.Find(ToStd(value));
        if (!capability) {
          return ErrorAt(field_offset,
                         absl::StrCat("unknown capability '", value, "'"));
        }
        ast.capability = *capability;
      } else if (name == "id" && !have_id) {
        have_id = true;
        if (value.empty() ||
            !std::all_of(value.begin(), value.end(), [](char c) {
              return absl::ascii_isalnum(c) || c == '-' || c == '_' ||
                     c == '.';
            })) {
          return ErrorAt(field_offset, absl::StrCat("bad id '", value, "'"));
        }
        ast.id = std::string(value);
      } else {
        return ErrorAt(field_offset,
                       absl::StrCat("unexpected field '", name, "'"));
      }
      start = next + 1;
    }
    if (!have_label) return ErrorAt(bar, "missing label field");
    if (!have_cap) return ErrorAt(bar, "missing cap field");
    return absl::OkStatus();
  }

  absl::Status ParseLabelField(absl::string_view value, size_t offset,
                               TemplateAst& ast) {
    LabelDist dist;
    std::array<bool, 3> listed = {false, false, false};
    for (absl::string_view entry : absl::StrSplit(value, ';')) {
      std::vector<absl::string_view> parts = absl::StrSplit(
          absl::StripAsciiWhitespace(entry), ' ', absl::SkipEmpty());
      if (parts.empty() || parts.size() > 2) {
        return ErrorAt(offset, absl::StrCat("bad label entry '", entry, "'"));
      }
      std::optional<Label> label = ParseLabel(ToStd(parts[0]));
      if (!label) {
        return ErrorAt(offset, absl::StrCat("unknown label '", parts[0], "'"));
      }
      int idx = static_cast<int>(*label);
      if (listed[idx]) {
        return ErrorAt(offset, absl::StrCat("duplicate label '", parts[0], "'"));
      }
      listed[idx] = true;
      double confidence = 1.0;
      if (parts.size() == 2) {
        auto [ptr, ec] = std::from_chars(
            parts[1].data(), parts[1].data() + parts[1].size(), confidence);
        if (ec != std::errc() || ptr != parts[1].data() + parts[1].size() ||
            !(confidence >= 0.0 && confidence <= 1.0)) {
          return ErrorAt(offset,
                         absl::StrCat("bad confidence '", parts[1], "'"));
        }
      }
      dist.p[idx] = confidence;
    }
    double sum = dist.Sum();
    if (sum <= 0.0) return ErrorAt(offset, "label confidences sum to zero");
    if (std::abs(sum - 1.0) > 1e-9) {
      int unlisted = 3 - static_cast<int>(std::count(listed.begin(),
                                                     listed.end(), true));
      if (sum < 1.0 && unlisted > 0) {
        // Rounded so that the remainder serializes as written by hand.
        double share = std::round((1.0 - sum) / unlisted * 1e12) / 1e12;
        for (int i = 0; i < 3; ++i) {
          if (!listed[i]) dist.p[i] = share;
        }
      } else {
        for (double& p : dist.p) p /= sum;
      }
    }
    ast.label_dist = dist;
    ast.ambiguous = dist.Max() < kAmbiguityThreshold;
    return absl::OkStatus();
  }

  // Whole-template checks done in textual order: repetition variables,
  // derivation sources and coordinated-group arity.
  absl::Status CheckStructure(const TemplateAst& ast) {
    std::set<std::string> declared_vars;
    std::set<SlotRef> bound;
    std::map<std::string, size_t> group_arity;
    std::function<absl::Status(const std::vector<Slot>&)> walk =
        [&](const std::vector<Slot>& slots) -> absl::Status {
      for (const Slot& slot : slots) {
        switch (slot.kind) {
          case SlotKind::kPlaceholder:
          case SlotKind::kNumeric:
            bound.insert(slot.ref);
            break;
          case SlotKind::kDerivation:
            // Capitalize only recases the bound word, so it binds like a
            // plain placeholder.
            if (slot.function == kCapitalizeDerivation) {
              bound.insert(slot.ref);
            } else if (!bound.contains(slot.ref)) {
              return ErrorAt(slot.offset,
                             absl::StrCat("derivation of never-bound "
                                          "placeholder ",
                                          slot.ref.Spelling()));
            }
            break;
          case SlotKind::kAlternation: {
            if (!slot.group.empty()) {
              auto [it, inserted] =
                  group_arity.emplace(slot.group, slot.branches.size());
              if (!inserted && it->second != slot.branches.size()) {
                return ErrorAt(slot.offset,
                               absl::StrCat("group ", slot.group, " has ",
                                            it->second, " branches here ",
                                            slot.branches.size()));
              }
            }
            for (const Slot& branch : slot.branches) {
              if (branch.kind == SlotKind::kPlaceholder ||
                  (branch.kind == SlotKind::kDerivation &&
                   branch.function == kCapitalizeDerivation)) {
                bound.insert(branch.ref);
              }
            }
            for (const Slot& branch : slot.branches) {
              if (branch.kind == SlotKind::kDerivation &&
                  !bound.contains(branch.ref)) {
                return ErrorAt(branch.offset,
                               absl::StrCat("derivation of never-bound "
                                            "placeholder ",
                                            branch.ref.Spelling()));
              }
            }
            break;
          }
          case SlotKind::kRepetition: {
            if (!declared_vars.insert(slot.rep_var).second) {
              return ErrorAt(slot.offset,
                             absl::StrCat("repetition variable ", slot.rep_var,
                                          " declared twice"));
            }
            if (absl::Status s = walk(slot.body); !s.ok()) return s;
            break;
          }
          case SlotKind::kCountRef:
            if (!declared_vars.contains(slot.rep_var)) {
              return ErrorAt(slot.offset,
                             absl::StrCat("count(", slot.rep_var,
                                          ") before its repetition block"));
            }
            break;
          case SlotKind::kLiteral:
          case SlotKind::kArticle:
            break;
        }
        if (slot.kind == SlotKind::kNumeric) {
          if (const auto* count = std::get_if<CountRef>(&slot.constraint->rhs);
              count != nullptr && !declared_vars.contains(count->var)) {
            return ErrorAt(slot.offset,
                           absl::StrCat("count(", count->var,
                                        ") before its repetition block"));
          }
        }
      }
      return absl::OkStatus();
    };
    if (absl::Status s = walk(ast.premise); !s.ok()) return s;
    return walk(ast.hypothesis);
  }

  absl::string_view src_;
  const CapabilityRegistry& registry_;
};

void SerializeSlots(const std::vector<Slot>& slots, std::string& out);

void SerializeBranch(const Slot& branch, std::string& out) {
  switch (branch.kind) {
    case SlotKind::kDerivation:
      absl::StrAppend(&out, branch.function, "(", branch.ref.Spelling(), ")");
      break;
    case SlotKind::kPlaceholder:
      out += branch.ref.Spelling();
      break;
    default:
      out += branch.text;
      break;
  }
}

void SerializeSlots(const std::vector<Slot>& slots, std::string& out) {
  for (const Slot& slot : slots) {
    switch (slot.kind) {
      case SlotKind::kLiteral:
        out += slot.text;
        break;
      case SlotKind::kPlaceholder:
        absl::StrAppend(&out, "{", slot.ref.Spelling(), "}");
        break;
      case SlotKind::kDerivation:
        out += "{";
        SerializeBranch(slot, out);
        out += "}";
        break;
      case SlotKind::kAlternation: {
        out += "{";
        if (!slot.group.empty()) absl::StrAppend(&out, slot.group, ":");
        for (size_t i = 0; i < slot.branches.size(); ++i) {
          if (i > 0) out += "/";
          SerializeBranch(slot.branches[i], out);
        }
        out += "}";
        break;
      }
      case SlotKind::kNumeric: {
        absl::StrAppend(&out, "{", slot.ref.Spelling());
        if (slot.constraint) {
          absl::StrAppend(&out, " ",
                          std::string(CompareOpSpelling(slot.constraint->op)),
                          " ");
          std::visit(
              [&](const auto& rhs) {
                using T = std::decay_t<decltype(rhs)>;
                if constexpr (std::is_same_v<T, SlotRef>) {
                  out += rhs.Spelling();
                } else if constexpr (std::is_same_v<T, int64_t>) {
                  absl::StrAppend(&out, rhs);
                } else {
                  absl::StrAppend(&out, "count(", rhs.var, ")");
                }
              },
              slot.constraint->rhs);
        }
        out += "}";
        break;
      }
      case SlotKind::kRepetition:
        absl::StrAppend(&out, "[rep ", slot.rep_var, "=", slot.rep_lo, "..",
                        slot.rep_hi, " sep=", Quote(slot.separator));
        if (slot.last_separator) {
          absl::StrAppend(&out, " last=", Quote(*slot.last_separator));
        }
        out += " : ";
        SerializeSlots(slot.body, out);
        out += "]";
        break;
      case SlotKind::kCountRef:
        absl::StrAppend(&out, "{count(", slot.rep_var, ")}");
        break;
      case SlotKind::kArticle:
        absl::StrAppend(&out, "{", slot.text, "}");
        break;
    }
  }
}

void VisitSlots(const std::vector<Slot>& slots,
                const std::function<void(const Slot&)>& fn) {
  for (const Slot& slot : slots) {
    fn(slot);
    if (slot.kind == SlotKind::kAlternation) VisitSlots(slot.branches, fn);
    if (slot.kind == SlotKind::kRepetition) VisitSlots(slot.body, fn);
  }
}

}  // namespace

std::string SlotRef::Spelling() const {
  if (!rep_var.empty()) return absl::StrCat(key, "@", rep_var);
  if (index) return absl::StrCat(key, *index);
  return key;
}

std::string_view CompareOpSpelling(CompareOp op) {
  switch (op) {
    case CompareOp::kLess:
      return "<";
    case CompareOp::kGreater:
      return ">";
    case CompareOp::kEqual:
      return "=";
    case CompareOp::kLessEqual:
      return "<=";
    case CompareOp::kGreaterEqual:
      return ">=";
  }
  return "<";
}

bool Compare(int64_t lhs, CompareOp op, int64_t rhs) {
  switch (op) {
    case CompareOp::kLess:
      return lhs < rhs;
    case CompareOp::kGreater:
      return lhs > rhs;
    case CompareOp::kEqual:
      return lhs == rhs;
    case CompareOp::kLessEqual:
      return lhs <= rhs;
    case CompareOp::kGreaterEqual:
      return lhs >= rhs;
  }
  return false;
}

bool Slot::operator==(const Slot& other) const {
  return kind == other.kind && text == other.text && ref == other.ref &&
         function == other.function && branches == other.branches &&
         group == other.group && constraint == other.constraint &&
         rep_var == other.rep_var && rep_lo == other.rep_lo &&
         rep_hi == other.rep_hi && separator == other.separator &&
         last_separator == other.last_separator && body == other.body;
}

absl::StatusOr<TemplateAst> ParseTemplate(std::string_view source,
                                          const CapabilityRegistry& registry) {
  return RecordParser(ToAbsl(source), registry).Parse();
}

std::optional<size_t> ErrorOffset(const absl::Status& status) {
  absl::optional<absl::Cord> payload = status.GetPayload(kOffsetPayload);
  if (!payload) return std::nullopt;
  size_t offset = 0;
  if (!absl::SimpleAtoi(std::string(*payload), &offset)) return std::nullopt;
  return offset;
}

std::string Serialize(const TemplateAst& ast) {
  std::string out = "P:";
  std::string premise;
  SerializeSlots(ast.premise, premise);
  if (!premise.empty()) absl::StrAppend(&out, " ", premise);
  out += " H:";
  std::string hypothesis;
  SerializeSlots(ast.hypothesis, hypothesis);
  if (!hypothesis.empty()) absl::StrAppend(&out, " ", hypothesis);
  out += " | label: ";
  std::vector<Label> order(kAllLabels.begin(), kAllLabels.end());
  std::stable_sort(order.begin(), order.end(), [&](Label a, Label b) {
    return ast.label_dist[a] > ast.label_dist[b];
  });
  bool first = true;
  for (Label label : order) {
    if (ast.label_dist[label] <= 0.0) continue;
    if (!first) out += "; ";
    first = false;
    absl::StrAppend(&out, std::string(LabelName(label)), " ",
                    FormatConfidence(ast.label_dist[label]));
  }
  absl::StrAppend(&out, " | cap: ", ast.capability.name);
  if (!ast.id.empty()) absl::StrAppend(&out, " | id: ", ast.id);
  return out;
}

absl::StatusOr<std::vector<TemplateRecord>> ParseTemplateCorpus(
    std::string_view text_in, std::string_view file_name,
    const CapabilityRegistry& registry) {
  absl::string_view text = ToAbsl(text_in);
  const std::string stem = std::filesystem::path(file_name).stem().string();
  std::vector<TemplateRecord> records;
  std::set<std::string> ids;
  std::vector<std::string> pending;
  int pending_line = 0;
  int line_no = 0;
  auto finish = [&]() -> absl::Status {
    if (pending.empty()) return absl::OkStatus();
    TemplateRecord record;
    record.source = absl::StrJoin(pending, " ");
    record.file = std::string(file_name);
    record.line = pending_line;
    pending.clear();
    absl::StatusOr<TemplateAst> ast = ParseTemplate(record.source, registry);
    if (!ast.ok()) {
      absl::Status status(ast.status().code(),
                          absl::StrCat(ToAbsl(file_name), ":", record.line, ": ",
                                       ast.status().message()));
      if (std::optional<size_t> offset = ErrorOffset(ast.status())) {
        status.SetPayload(kOffsetPayload, absl::Cord(absl::StrCat(*offset)));
      }
      return status;
    }
    record.ast = *std::move(ast);
    if (record.ast.id.empty()) {
      record.ast.id = absl::StrCat(stem, "-", records.size() + 1);
    }
    if (!ids.insert(record.ast.id).second) {
      return absl::AlreadyExistsError(absl::StrCat(
          ToAbsl(file_name), ":", record.line, ": duplicate template id ",
          record.ast.id));
    }
    records.push_back(std::move(record));
    return absl::OkStatus();
  };
  for (absl::string_view raw : absl::StrSplit(text, '\n')) {
    ++line_no;
    absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty()) {
      if (absl::Status s = finish(); !s.ok()) return s;
      continue;
    }
    if (line.front() == '#') continue;
    if (pending.empty()) pending_line = line_no;
    pending.emplace_back(line);
  }
  if (absl::Status s = finish(); !s.ok()) return s;
  return records;
}

absl::StatusOr<std::vector<TemplateRecord>> LoadTemplateCorpus(
    std::string_view path, const CapabilityRegistry& registry) {
  std::filesystem::path root{std::string(path)};
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(root, ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".tmpl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
      return a.filename() < b.filename();
    });
  } else if (std::filesystem::is_regular_file(root, ec)) {
    files.push_back(root);
  } else {
    return absl::NotFoundError(
        absl::StrCat("template path not found: ", ToAbsl(path)));
  }
  std::vector<TemplateRecord> all;
  std::map<std::string, std::string> origin;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      return absl::NotFoundError(absl::StrCat("cannot read ", file.string()));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    absl::StatusOr<std::vector<TemplateRecord>> records =
        ParseTemplateCorpus(buffer.str(), file.filename().string(), registry);
    if (!records.ok()) return records.status();
    for (TemplateRecord& record : *records) {
      auto [it, inserted] = origin.emplace(record.ast.id, record.file);
      if (!inserted) {
        return absl::AlreadyExistsError(
            absl::StrCat("template id ", record.ast.id, " defined in both ",
                         it->second, " and ", record.file));
      }
      all.push_back(std::move(record));
    }
  }
  return all;
}

std::vector<SlotRef> CollectRefs(const TemplateAst& ast) {
  std::vector<SlotRef> refs;
  std::set<SlotRef> seen;
  auto add = [&](const SlotRef& ref) {
    if (seen.insert(ref).second) refs.push_back(ref);
  };
  auto fn = [&](const Slot& slot) {
    switch (slot.kind) {
      case SlotKind::kPlaceholder:
      case SlotKind::kDerivation:
        add(slot.ref);
        break;
      case SlotKind::kNumeric:
        add(slot.ref);
        if (const auto* rhs = std::get_if<SlotRef>(&slot.constraint->rhs)) {
          add(*rhs);
        }
        break;
      default:
        break;
    }
  };
  VisitSlots(ast.premise, fn);
  VisitSlots(ast.hypothesis, fn);
  return refs;
}

std::vector<std::string> PlaceholderFeatures(const TemplateAst& ast) {
  std::vector<std::string> features;
  std::set<std::string> seen;
  auto add = [&](std::string name) {
    if (seen.insert(name).second) features.push_back(std::move(name));
  };
  auto fn = [&](const Slot& slot) {
    switch (slot.kind) {
      case SlotKind::kPlaceholder:
        add(slot.ref.key);
        break;
      case SlotKind::kDerivation:
        add(slot.ref.key);
        add(absl::StrCat(slot.function, "(", slot.ref.key, ")"));
        break;
      case SlotKind::kNumeric:
        add(slot.ref.key);
        if (const auto* rhs = std::get_if<SlotRef>(&slot.constraint->rhs)) {
          add(rhs->key);
        }
        break;
      default:
        break;
    }
  };
  VisitSlots(ast.premise, fn);
  VisitSlots(ast.hypothesis, fn);
  return features;
}

std::vector<std::string> LiteralWords(const TemplateAst& ast) {
  std::vector<std::string> words;
  auto split = [&](absl::string_view text) {
    std::string word;
    auto emit = [&] {
      size_t b = word.find_first_not_of('\'');
      size_t e = word.find_last_not_of('\'');
      if (b != std::string::npos) words.push_back(word.substr(b, e - b + 1));
      word.clear();
    };
    for (char c : text) {
      if (absl::ascii_isalnum(c) || c == '\'') {
        word.push_back(absl::ascii_tolower(c));
      } else {
        emit();
      }
    }
    emit();
  };
  auto fn = [&](const Slot& slot) {
    if (slot.kind == SlotKind::kLiteral) split(slot.text);
  };
  VisitSlots(ast.premise, fn);
  VisitSlots(ast.hypothesis, fn);
  return words;
}

}  // namespace nlicheck
