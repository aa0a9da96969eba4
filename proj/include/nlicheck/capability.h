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

#ifndef NLICHECK_CAPABILITY_H_
#define NLICHECK_CAPABILITY_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlicheck {

enum class CapabilityGroup { kLinguistic, kLogical, kKnowledge, kPragmatic };

std::string_view GroupName(CapabilityGroup group);
std::optional<CapabilityGroup> ParseGroup(std::string_view name);

struct Capability {
  std::string name;
  CapabilityGroup group = CapabilityGroup::kLinguistic;

  bool operator==(const Capability&) const = default;
};

// The set of reasoning capabilities a template may be tagged with. The default
// registry holds the 17 capabilities in four groups; callers may build a
// custom one for experimental taxonomies.
class CapabilityRegistry {
 public:
  explicit CapabilityRegistry(std::vector<Capability> capabilities);

  static const CapabilityRegistry& Default();

  std::optional<Capability> Find(std::string_view name) const;
  const std::vector<Capability>& All() const { return capabilities_; }

 private:
  std::vector<Capability> capabilities_;
};

}  // namespace nlicheck

#endif  // NLICHECK_CAPABILITY_H_
