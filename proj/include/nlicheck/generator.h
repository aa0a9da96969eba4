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

// Expansion of templates into concrete premise/hypothesis pairs.
//
// The satisfying bindings of a template form a mixed-radix index space: one
// digit group per lexical key (an injective draw of as many entries as the
// key has distinct bindings), one digit per numeric constraint group (the
// enumerated satisfying tuples), and one digit per alternation. Repetition
// counts split the space into one sub-space per count combination. A seeded
// Feistel permutation walks each sub-space without materializing it.

#ifndef NLICHECK_GENERATOR_H_
#define NLICHECK_GENERATOR_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlicheck/lexicon.h"
#include "nlicheck/suite.h"
#include "nlicheck/template_ast.h"

namespace nlicheck {

absl::StatusOr<GeneratedExample> Instantiate(const TemplateAst& ast,
                                             const Binding& binding,
                                             const LexiconStore& store);

// Verifies distinctness, domain membership and numeric constraints.
absl::Status CheckBinding(const TemplateAst& ast, const Binding& binding,
                          const LexiconStore& store);

struct SpaceCount {
  uint64_t value = 0;
  bool saturated = false;  // true value exceeds 2^64-1
};

absl::StatusOr<SpaceCount> CountSpace(const TemplateAst& ast,
                                      const LexiconStore& store);

class BindingSpace;

// Deterministic stream of distinct bindings in seeded uniform order.
class BindingStream {
 public:
  BindingStream(std::shared_ptr<const BindingSpace> space, uint64_t seed);
  ~BindingStream();
  BindingStream(BindingStream&&) noexcept;
  BindingStream& operator=(BindingStream&&) noexcept;

  std::optional<Binding> Next();

 private:
  struct State;
  std::shared_ptr<const BindingSpace> space_;
  std::unique_ptr<State> state_;
};

// Returns an empty stream for unsatisfiable templates; errors only when the
// template references something the store lacks.
absl::StatusOr<BindingStream> EnumerateBindings(const TemplateAst& ast,
                                                const LexiconStore& store,
                                                uint64_t seed);

struct GenerationOptions {
  uint64_t seed = 0;
  uint64_t default_target = 1000;
  uint64_t knowledge_target = 100;
  // Overrides by template id.
  std::map<std::string, uint64_t> per_template;
  int threads = 0;  // 0 = hardware concurrency
};

absl::StatusOr<SuiteDataset> GenerateSuite(
    const std::vector<TemplateAst>& templates, const LexiconStore& store,
    const GenerationOptions& options);

// Seed of one template's stream: a stable mix of the suite seed and the id.
uint64_t TemplateSeed(uint64_t seed, std::string_view template_id);

// Stable content hash of a template corpus (hex).
std::string CorpusHash(const std::vector<TemplateAst>& templates);

}  // namespace nlicheck

#endif  // NLICHECK_GENERATOR_H_
