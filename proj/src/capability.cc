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

#include "nlicheck/capability.h"

#include <utility>

namespace nlicheck {

std::string_view GroupName(CapabilityGroup group) {
  switch (group) {
    case CapabilityGroup::kLinguistic:
      return "Linguistic";
    case CapabilityGroup::kLogical:
      return "Logical";
    case CapabilityGroup::kKnowledge:
      return "Knowledge";
    case CapabilityGroup::kPragmatic:
      return "Pragmatic";
  }
  return "Linguistic";
}

std::optional<CapabilityGroup> ParseGroup(std::string_view name) {
  for (CapabilityGroup g :
       {CapabilityGroup::kLinguistic, CapabilityGroup::kLogical,
        CapabilityGroup::kKnowledge, CapabilityGroup::kPragmatic}) {
    if (GroupName(g) == name) return g;
  }
  return std::nullopt;
}

CapabilityRegistry::CapabilityRegistry(std::vector<Capability> capabilities)
    : capabilities_(std::move(capabilities)) {}

const CapabilityRegistry& CapabilityRegistry::Default() {
  static const CapabilityRegistry* const kRegistry = [] {
    using G = CapabilityGroup;
    return new CapabilityRegistry({
        {"lexical", G::kLinguistic},
        {"syntactic", G::kLinguistic},
        {"negation", G::kLogical},
        {"boolean", G::kLogical},
        {"quantifier", G::kLogical},
        {"conditional", G::kLogical},
        {"comparative", G::kLogical},
        {"relational", G::kLogical},
        {"spatial", G::kLogical},
        {"causal", G::kLogical},
        {"temporal", G::kLogical},
        {"coreference", G::kLogical},
        {"numerical", G::kLogical},
        {"world", G::kKnowledge},
        {"taxonomic", G::kKnowledge},
        {"presupposition", G::kPragmatic},
        {"implicature", G::kPragmatic},
    });
  }();
  return *kRegistry;
}

std::optional<Capability> CapabilityRegistry::Find(
    std::string_view name) const {
  for (const Capability& c : capabilities_) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

}  // namespace nlicheck
