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

#ifndef NLICHECK_SUITE_H_
#define NLICHECK_SUITE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlicheck/capability.h"
#include "nlicheck/labels.h"
#include "nlicheck/lexicon.h"

namespace nlicheck {

using BoundValue = std::variant<LexiconEntry, int64_t>;

std::string BoundSurface(const BoundValue& value);

// A full assignment for one template instantiation.
//
// Assignment labels are slot spellings ("NAME", "NAME2", "N1"); repetition
// items are labelled "NAME@i[j]" with j counting from 0. Alternation choices
// are keyed by group id, or "#<n>" for the n-th free alternation.
struct Binding {
  std::map<std::string, BoundValue> assignments;
  std::map<std::string, int> choices;
  std::map<std::string, int> counts;

  // label -> surface text, plus "count(var)" entries.
  std::map<std::string, std::string> SurfaceMap() const;

  bool operator==(const Binding&) const = default;
};

struct GeneratedExample {
  std::string example_id;  // "<template-id>#<ordinal>"
  std::string template_id;
  Capability capability;
  std::string premise;
  std::string hypothesis;
  Label gold = Label::kEntailment;
  double gold_confidence = 1.0;
  std::map<std::string, std::string> binding;  // label -> surface
  // Only populated for examples generated in this process.
  std::optional<Binding> full_binding;

  bool Ambiguous() const;
};

struct TemplateGenerationReport {
  std::string template_id;
  uint64_t requested = 0;
  uint64_t produced = 0;
  uint64_t space = 0;
  bool space_saturated = false;
  std::string note;
};

struct SuiteMetadata {
  uint64_t seed = 0;
  std::string corpus_hash;
  std::vector<TemplateGenerationReport> report;
};

struct SuiteDataset {
  std::vector<GeneratedExample> examples;
  // Template ids in first-appearance order, and their example positions.
  std::vector<std::string> template_order;
  std::map<std::string, std::vector<size_t>> template_index;
  SuiteMetadata metadata;

  // Recomputes template_order/template_index from `examples`.
  void RebuildIndex();
  const GeneratedExample* FindExample(const std::string& example_id) const;

 private:
  std::map<std::string, size_t> by_id_;
};

}  // namespace nlicheck

#endif  // NLICHECK_SUITE_H_
