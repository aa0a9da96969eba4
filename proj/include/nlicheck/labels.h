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

#ifndef NLICHECK_LABELS_H_
#define NLICHECK_LABELS_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace nlicheck {

// NLI labels. The enumerator order is the tie-breaking order used by every
// argmax in the project: entailment beats neutral beats contradiction.
enum class Label { kEntailment = 0, kNeutral = 1, kContradiction = 2 };

inline constexpr std::array<Label, 3> kAllLabels = {
    Label::kEntailment, Label::kNeutral, Label::kContradiction};

std::string_view LabelName(Label label);

// Accepts the canonical names plus the short forms "entail", "contradict",
// "cont" and single letters E/N/C (case-insensitive).
std::optional<Label> ParseLabel(std::string_view text);

// A probability (or confidence) per label, indexed by Label.
struct LabelDist {
  std::array<double, 3> p = {0.0, 0.0, 0.0};

  double& operator[](Label l) { return p[static_cast<int>(l)]; }
  double operator[](Label l) const { return p[static_cast<int>(l)]; }

  double Sum() const { return p[0] + p[1] + p[2]; }
  // Highest-probability label; ties resolved entailment > neutral >
  // contradiction.
  Label Argmax() const;
  double Max() const;

  bool operator==(const LabelDist&) const = default;
};

}  // namespace nlicheck

#endif  // NLICHECK_LABELS_H_
