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

#include "nlicheck/suite.h"

#include "absl/strings/str_cat.h"
#include "nlicheck/template_ast.h"

namespace nlicheck {

std::string BoundSurface(const BoundValue& value) {
  if (const auto* entry = std::get_if<LexiconEntry>(&value)) {
    return entry->surface;
  }
  return absl::StrCat(std::get<int64_t>(value));
}

std::map<std::string, std::string> Binding::SurfaceMap() const {
  std::map<std::string, std::string> out;
  for (const auto& [label, value] : assignments) {
    out[label] = BoundSurface(value);
  }
  for (const auto& [var, count] : counts) {
    out[absl::StrCat("count(", var, ")")] = absl::StrCat(count);
  }
  return out;
}

bool GeneratedExample::Ambiguous() const {
  return gold_confidence < kAmbiguityThreshold;
}

void SuiteDataset::RebuildIndex() {
  template_order.clear();
  template_index.clear();
  by_id_.clear();
  for (size_t i = 0; i < examples.size(); ++i) {
    const GeneratedExample& ex = examples[i];
    auto [it, inserted] = template_index.try_emplace(ex.template_id);
    if (inserted) template_order.push_back(ex.template_id);
    it->second.push_back(i);
    by_id_[ex.example_id] = i;
  }
}

const GeneratedExample* SuiteDataset::FindExample(
    const std::string& example_id) const {
  auto it = by_id_.find(example_id);
  if (it == by_id_.end()) return nullptr;
  return &examples[it->second];
}

}  // namespace nlicheck
