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

#include "nlicheck/labels.h"

#include "absl/strings/ascii.h"

namespace nlicheck {

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kEntailment:
      return "entailment";
    case Label::kNeutral:
      return "neutral";
    case Label::kContradiction:
      return "contradiction";
  }
  return "entailment";
}

std::optional<Label> ParseLabel(std::string_view text) {
  const std::string lower = absl::AsciiStrToLower(std::string(text));
  if (lower == "entailment" || lower == "entail" || lower == "e") {
    return Label::kEntailment;
  }
  if (lower == "neutral" || lower == "n") return Label::kNeutral;
  if (lower == "contradiction" || lower == "contradict" || lower == "cont" ||
      lower == "c") {
    return Label::kContradiction;
  }
  return std::nullopt;
}

Label LabelDist::Argmax() const {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<Label>(best);
}

double LabelDist::Max() const { return p[static_cast<int>(Argmax())]; }

}  // namespace nlicheck
