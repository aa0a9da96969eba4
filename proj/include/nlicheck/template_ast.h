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

// Template syntax, one record per line (records in a corpus file are separated
// by blank lines; a record may be wrapped over several lines):
//
//   P: <premise> H: <hypothesis> | label: <label> <conf>[; <label> <conf>]
//       | cap: <capability> [| id: <id>]
//
// Inside premise and hypothesis:
//
//   {KEY} {KEY2}            placeholder; same key+index is one binding,
//                           distinct indices bind distinct entries
//   {Fn(KEY2)}              derivation of a bound placeholder
//   {x/y}  {KEY1/KEY2}      free alternation (one choice per template use)
//   {g1:x/y}                coordinated alternation; every alternation with
//                           group g1 takes the same branch index
//   {a/an}  {A/An}          article agreeing with the following word
//   {N2 < N1}               numeric placeholder with a constraint; the right
//                           side is a numeric slot, an integer or count(i)
//   [rep i=2..6 sep=", " last=" and " : {NAME@i}]
//                           repetition block; {count(i)} gives its count

#ifndef NLICHECK_TEMPLATE_AST_H_
#define NLICHECK_TEMPLATE_AST_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlicheck/capability.h"
#include "nlicheck/labels.h"

namespace nlicheck {

class LexiconStore;

// A reference to one placeholder binding: KEY, KEY<n> or KEY@var.
struct SlotRef {
  std::string key;
  std::optional<int> index;
  std::string rep_var;  // non-empty for KEY@var inside a repetition block

  // Canonical spelling, e.g. "NAME", "NAME2", "NAME@i".
  std::string Spelling() const;
  bool operator==(const SlotRef&) const = default;
  auto operator<=>(const SlotRef&) const = default;
};

struct CountRef {
  std::string var;
  bool operator==(const CountRef&) const = default;
};

enum class CompareOp { kLess, kGreater, kEqual, kLessEqual, kGreaterEqual };

std::string_view CompareOpSpelling(CompareOp op);
bool Compare(int64_t lhs, CompareOp op, int64_t rhs);

struct NumericConstraint {
  CompareOp op = CompareOp::kLess;
  std::variant<SlotRef, int64_t, CountRef> rhs;

  bool operator==(const NumericConstraint&) const = default;
};

enum class SlotKind {
  kLiteral,
  kPlaceholder,
  kDerivation,
  kAlternation,
  kNumeric,
  kRepetition,
  kCountRef,
  kArticle,
};

struct Slot {
  SlotKind kind = SlotKind::kLiteral;

  // kLiteral: the text, byte-exact. kArticle: "a/an" or "A/An".
  std::string text;
  // kPlaceholder, kNumeric, kDerivation (the source binding).
  SlotRef ref;
  // kDerivation: derivation name.
  std::string function;
  // kAlternation: each branch is a kLiteral, kPlaceholder or kDerivation slot.
  std::vector<Slot> branches;
  // kAlternation: coordination group id; empty for a free alternation.
  std::string group;
  // kNumeric.
  std::optional<NumericConstraint> constraint;
  // kRepetition and kCountRef.
  std::string rep_var;
  int rep_lo = 0;
  int rep_hi = 0;
  std::string separator;
  std::optional<std::string> last_separator;
  std::vector<Slot> body;

  // Byte offset of the construct in the record source; not part of equality.
  size_t offset = 0;

  bool operator==(const Slot& other) const;
};

struct TemplateAst {
  std::string id;
  Capability capability;
  std::vector<Slot> premise;
  std::vector<Slot> hypothesis;
  LabelDist label_dist;
  bool ambiguous = false;

  Label Gold() const { return label_dist.Argmax(); }
  double GoldConfidence() const { return label_dist.Max(); }

  bool operator==(const TemplateAst&) const = default;
};

// Templates whose top label confidence is below this are ambiguous.
inline constexpr double kAmbiguityThreshold = 0.7;

// Parses one record. Errors carry a byte offset into `source`, retrievable
// with ErrorOffset().
absl::StatusOr<TemplateAst> ParseTemplate(
    std::string_view source,
    const CapabilityRegistry& registry = CapabilityRegistry::Default());

// Canonical one-line source; ParseTemplate(Serialize(ast)) == ast.
std::string Serialize(const TemplateAst& ast);

std::optional<size_t> ErrorOffset(const absl::Status& status);

struct TemplateRecord {
  TemplateAst ast;
  std::string source;  // record text as parsed (wrapped lines joined by ' ')
  std::string file;
  int line = 0;
};

// Parses a corpus document. Records without an id get "<stem>-<ordinal>".
absl::StatusOr<std::vector<TemplateRecord>> ParseTemplateCorpus(
    std::string_view text, std::string_view file_name,
    const CapabilityRegistry& registry = CapabilityRegistry::Default());

// Loads every `*.tmpl` file under `path` (or `path` itself), in filename
// order. Duplicate template ids are an error.
absl::StatusOr<std::vector<TemplateRecord>> LoadTemplateCorpus(
    std::string_view path,
    const CapabilityRegistry& registry = CapabilityRegistry::Default());

enum class DiagnosticKind {
  kUnknownKey,
  kUnknownDerivation,
  kUnsatisfiableDistinctness,
  kUnsatisfiableConstraint,
  kNonNumericConstraint,
  kEmptyDerivationDomain,
  kRepetitionVariable,
};

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  size_t offset = 0;  // offset into the serialized/parsed source

  bool operator==(const Diagnostic&) const = default;
};

// Checks `ast` against a lexicon. Empty result means generation can proceed.
std::vector<Diagnostic> Validate(const TemplateAst& ast,
                                 const LexiconStore& store);

// Collects every placeholder binding of the template, premise first, each once.
std::vector<SlotRef> CollectRefs(const TemplateAst& ast);

// Keys used by the template's placeholders, plus "Fn(KEY)" for derivations,
// in first-use order. These are the placeholder features of the importance
// regression.
std::vector<std::string> PlaceholderFeatures(const TemplateAst& ast);

// Literal words of the template pattern (lowercased, placeholder text
// excluded), in order.
std::vector<std::string> LiteralWords(const TemplateAst& ast);

}  // namespace nlicheck

#endif  // NLICHECK_TEMPLATE_AST_H_
