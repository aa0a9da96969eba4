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

#include "nlicheck/generator.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <unordered_set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"

namespace nlicheck {

namespace {

using u128 = unsigned __int128;
constexpr u128 kU64Max = std::numeric_limits<uint64_t>::max();
// Numeric groups are enumerated explicitly up to this many candidate tuples.
constexpr u128 kMaxNumericProduct = 20'000'000;

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Fnv1a(std::string_view text,
               uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

u128 SaturatingMul(u128 a, u128 b) {
  if (a == 0 || b == 0) return 0;
  if (a > (kU64Max + 1) / b + 1) return kU64Max + 1;
  u128 p = a * b;
  return p > kU64Max ? kU64Max + 1 : p;
}

// Number of injective draws of m items from n, saturated above 2^64-1.
u128 Arrangements(uint64_t n, uint64_t m) {
  if (m > n) return 0;
  u128 out = 1;
  for (uint64_t j = 0; j < m; ++j) out = SaturatingMul(out, n - j);
  return out;
}

// Keyed permutation of [0, n) by a balanced Feistel network with
// cycle-walking.
class FeistelPermutation {
 public:
  FeistelPermutation(uint64_t n, uint64_t seed) : n_(n) {
    int bits = 2;
    while (bits < 64 && (uint64_t{1} << bits) < n) ++bits;
    if (bits % 2 == 1) ++bits;
    half_bits_ = bits / 2;
    mask_ = half_bits_ >= 64 ? ~uint64_t{0} : (uint64_t{1} << half_bits_) - 1;
    uint64_t state = seed;
    for (uint64_t& key : keys_) {
      state = SplitMix64(state);
      key = state;
    }
  }

  uint64_t Map(uint64_t x) const {
    do {
      x = Round(x);
    } while (x >= n_);
    return x;
  }

 private:
  uint64_t Round(uint64_t x) const {
    uint64_t left = x >> half_bits_;
    uint64_t right = x & mask_;
    for (uint64_t key : keys_) {
      uint64_t next = left ^ (SplitMix64(right ^ key) & mask_);
      left = right;
      right = next;
    }
    return (left << half_bits_) | right;
  }

  uint64_t n_;
  int half_bits_ = 1;
  uint64_t mask_ = 1;
  std::array<uint64_t, 4> keys_{};
};

std::string ItemLabel(const std::string& key, const std::string& var,
                      int item) {
  return absl::StrCat(key, "@", var, "[", item, "]");
}

bool IsHardDiagnostic(DiagnosticKind kind) {
  return kind == DiagnosticKind::kUnknownKey ||
         kind == DiagnosticKind::kUnknownDerivation ||
         kind == DiagnosticKind::kNonNumericConstraint ||
         kind == DiagnosticKind::kRepetitionVariable;
}

}  // namespace

// The satisfying assignments of one template, split by repetition counts.
class BindingSpace {
 public:
  struct LexGroup {
    std::string key;
    std::vector<std::string> labels;
    std::shared_ptr<const std::vector<LexiconEntry>> domain;
    u128 radix = 0;
  };

  struct NumGroup {
    std::vector<std::string> labels;
    // Dense groups are a single unconstrained slot over [lo, lo + size).
    bool dense = false;
    int64_t lo = 0;
    std::vector<int64_t> tuples;  // flattened, labels.size() per tuple
    uint64_t size = 0;
  };

  struct SubSpace {
    std::map<std::string, int> counts;
    std::vector<LexGroup> lex;
    std::vector<NumGroup> num;
    uint64_t size = 0;
    bool saturated = false;
  };

  struct Constraint {
    std::string lhs;
    CompareOp op;
    std::variant<std::string, int64_t, CountRef> rhs;  // label, const, count
    size_t offset = 0;
  };

  // With `enumerate_numeric` false, constrained numeric groups are left
  // empty; the result is only good for Check().
  static std::shared_ptr<BindingSpace> Build(const TemplateAst& ast,
                                             const LexiconStore& store,
                                             std::vector<Diagnostic>& diags,
                                             bool enumerate_numeric = true);

  SpaceCount Total() const {
    u128 total = 0;
    bool saturated = false;
    for (const SubSpace& sub : subspaces_) {
      if (sub.saturated) {
        saturated = true;
        continue;
      }
      total += sub.size;
    }
    if (saturated || total > kU64Max) return {~uint64_t{0}, true};
    return {static_cast<uint64_t>(total), false};
  }

  const std::vector<SubSpace>& subspaces() const { return subspaces_; }

  Binding Decode(const SubSpace& sub, uint64_t index) const {
    Binding binding;
    binding.counts = sub.counts;
    for (const LexGroup& group : sub.lex) {
      uint64_t radix = static_cast<uint64_t>(group.radix);
      uint64_t digit = index % radix;
      index /= radix;
      const size_t n = group.domain->size();
      std::vector<char> used(n, 0);
      for (size_t j = 0; j < group.labels.size(); ++j) {
        uint64_t base = n - j;
        uint64_t pick = digit % base;
        digit /= base;
        size_t k = 0;
        for (;; ++k) {
          if (used[k]) continue;
          if (pick == 0) break;
          --pick;
        }
        used[k] = 1;
        binding.assignments[group.labels[j]] = (*group.domain)[k];
      }
    }
    for (const NumGroup& group : sub.num) {
      uint64_t digit = index % group.size;
      index /= group.size;
      AssignNumeric(group, digit, binding);
    }
    for (const auto& [key, branches] : alternations_) {
      binding.choices[key] = static_cast<int>(index % branches);
      index /= branches;
    }
    return binding;
  }

  Binding Sample(const SubSpace& sub, std::mt19937_64& rng) const {
    Binding binding;
    binding.counts = sub.counts;
    for (const LexGroup& group : sub.lex) {
      std::vector<size_t> order(group.domain->size());
      std::iota(order.begin(), order.end(), 0);
      for (size_t j = 0; j < group.labels.size(); ++j) {
        size_t pick = j + rng() % (order.size() - j);
        std::swap(order[j], order[pick]);
        binding.assignments[group.labels[j]] = (*group.domain)[order[j]];
      }
    }
    for (const NumGroup& group : sub.num) {
      AssignNumeric(group, rng() % group.size, binding);
    }
    for (const auto& [key, branches] : alternations_) {
      binding.choices[key] = static_cast<int>(rng() % branches);
    }
    return binding;
  }

  absl::Status Check(const Binding& binding) const;

 private:
  struct RepInfo {
    std::string var;
    int lo = 0;
    int hi = 0;
  };
  struct LexKey {
    std::string key;
    std::vector<std::string> fixed;      // fixed labels, first-use order
    std::vector<std::string> rep_vars;   // vars whose body uses KEY@var
    std::set<std::string> functions;     // derivations applied to the key
    size_t offset = 0;
  };
  struct NumRef {
    std::string label;
    std::string key;
    NumericRange range;
  };

  static void AssignNumeric(const NumGroup& group, uint64_t digit,
                            Binding& binding) {
    if (group.dense) {
      binding.assignments[group.labels[0]] =
          group.lo + static_cast<int64_t>(digit);
      return;
    }
    const size_t arity = group.labels.size();
    for (size_t j = 0; j < arity; ++j) {
      binding.assignments[group.labels[j]] = group.tuples[digit * arity + j];
    }
  }

  int64_t ConstraintRhs(const Constraint& c,
                        const std::map<std::string, int64_t>& values,
                        const std::map<std::string, int>& counts) const {
    if (const auto* label = std::get_if<std::string>(&c.rhs)) {
      return values.at(*label);
    }
    if (const auto* constant = std::get_if<int64_t>(&c.rhs)) return *constant;
    return counts.at(std::get<CountRef>(c.rhs).var);
  }

  std::vector<RepInfo> reps_;
  std::vector<LexKey> lex_keys_;
  std::map<std::string, std::shared_ptr<const std::vector<LexiconEntry>>>
      domains_;
  std::vector<NumRef> num_refs_;
  std::vector<Constraint> constraints_;
  std::vector<std::pair<std::string, int>> alternations_;
  std::vector<SubSpace> subspaces_;
};

std::shared_ptr<BindingSpace> BindingSpace::Build(
    const TemplateAst& ast, const LexiconStore& store,
    std::vector<Diagnostic>& diags, bool enumerate_numeric) {
  auto space = std::make_shared<BindingSpace>();
  std::set<std::string> reported_keys;
  std::map<std::string, size_t> lex_index;
  std::map<std::string, size_t> num_index;
  int free_alternations = 0;
  std::set<std::string> seen_groups;

  auto unknown_key = [&](const std::string& key, size_t offset) {
    if (reported_keys.insert(key).second) {
      diags.push_back({DiagnosticKind::kUnknownKey,
                       absl::StrCat("unknown lexicon key ", key), offset});
    }
  };
  auto use_ref = [&](const SlotRef& ref, size_t offset) {
    if (!store.HasKey(ref.key)) {
      unknown_key(ref.key, offset);
      return;
    }
    if (store.IsNumeric(ref.key)) {
      if (!ref.rep_var.empty()) {
        diags.push_back({DiagnosticKind::kRepetitionVariable,
                         absl::StrCat("numeric key ", ref.key,
                                      " cannot be repeated"),
                         offset});
        return;
      }
      std::string label = ref.Spelling();
      if (!num_index.contains(label)) {
        num_index[label] = space->num_refs_.size();
        space->num_refs_.push_back({label, ref.key, *store.Range(ref.key)});
      }
      return;
    }
    auto [it, inserted] = lex_index.try_emplace(ref.key, space->lex_keys_.size());
    if (inserted) {
      space->lex_keys_.push_back({ref.key, {}, {}, {}, offset});
    }
    LexKey& lex = space->lex_keys_[it->second];
    if (ref.rep_var.empty()) {
      std::string label = ref.Spelling();
      if (std::find(lex.fixed.begin(), lex.fixed.end(), label) ==
          lex.fixed.end()) {
        lex.fixed.push_back(label);
      }
    } else if (std::find(lex.rep_vars.begin(), lex.rep_vars.end(),
                         ref.rep_var) == lex.rep_vars.end()) {
      lex.rep_vars.push_back(ref.rep_var);
    }
  };
  auto use_derivation = [&](const Slot& slot) {
    use_ref(slot.ref, slot.offset);
    if (!store.HasDerivation(slot.function)) {
      diags.push_back({DiagnosticKind::kUnknownDerivation,
                       absl::StrCat("unknown derivation ", slot.function),
                       slot.offset});
      return;
    }
    if (!store.HasKey(slot.ref.key)) return;
    if (store.IsNumeric(slot.ref.key)) {
      if (slot.function != kCapitalizeDerivation) {
        diags.push_back({DiagnosticKind::kEmptyDerivationDomain,
                         absl::StrCat(slot.function,
                                      " cannot derive from numeric key ",
                                      slot.ref.key),
                         slot.offset});
      }
      return;
    }
    if (slot.function != kCapitalizeDerivation) {
      space->lex_keys_[lex_index[slot.ref.key]].functions.insert(
          slot.function);
    }
  };
  std::function<void(const std::vector<Slot>&)> walk =
      [&](const std::vector<Slot>& slots) {
        for (const Slot& slot : slots) {
          switch (slot.kind) {
            case SlotKind::kPlaceholder:
              use_ref(slot.ref, slot.offset);
              break;
            case SlotKind::kDerivation:
              use_derivation(slot);
              break;
            case SlotKind::kNumeric: {
              const NumericConstraint& c = *slot.constraint;
              bool ok = true;
              auto require_numeric = [&](const SlotRef& ref) {
                if (!store.HasKey(ref.key)) {
                  unknown_key(ref.key, slot.offset);
                  ok = false;
                } else if (!store.IsNumeric(ref.key)) {
                  diags.push_back({DiagnosticKind::kNonNumericConstraint,
                                   absl::StrCat("constraint on non-numeric "
                                                "slot ",
                                                ref.Spelling()),
                                   slot.offset});
                  ok = false;
                } else {
                  use_ref(ref, slot.offset);
                }
              };
              require_numeric(slot.ref);
              Constraint constraint{slot.ref.Spelling(), c.op, int64_t{0},
                                    slot.offset};
              if (const auto* rhs = std::get_if<SlotRef>(&c.rhs)) {
                require_numeric(*rhs);
                constraint.rhs = rhs->Spelling();
              } else if (const auto* k = std::get_if<int64_t>(&c.rhs)) {
                constraint.rhs = *k;
              } else {
                constraint.rhs = std::get<CountRef>(c.rhs);
              }
              if (ok) space->constraints_.push_back(std::move(constraint));
              break;
            }
            case SlotKind::kAlternation: {
              std::string key = slot.group.empty()
                                    ? absl::StrCat("#", free_alternations++)
                                    : slot.group;
              if (seen_groups.insert(key).second) {
                space->alternations_.emplace_back(
                    key, static_cast<int>(slot.branches.size()));
              }
              for (const Slot& branch : slot.branches) {
                if (branch.kind == SlotKind::kPlaceholder) {
                  use_ref(branch.ref, branch.offset);
                } else if (branch.kind == SlotKind::kDerivation) {
                  use_derivation(branch);
                }
              }
              break;
            }
            case SlotKind::kRepetition:
              space->reps_.push_back({slot.rep_var, slot.rep_lo, slot.rep_hi});
              walk(slot.body);
              break;
            default:
              break;
          }
        }
      };
  walk(ast.premise);
  walk(ast.hypothesis);
  for (const Diagnostic& d : diags) {
    if (IsHardDiagnostic(d.kind)) return nullptr;
  }

  // Lexical domains, restricted to entries every applied derivation covers.
  for (const LexKey& lex : space->lex_keys_) {
    std::vector<LexiconEntry> entries = *store.Lookup(lex.key);
    const size_t unfiltered = entries.size();
    std::erase_if(entries, [&](const LexiconEntry& entry) {
      for (const std::string& fn : lex.functions) {
        absl::StatusOr<std::vector<std::string>> derived =
            store.Derive(fn, entry.surface);
        if (!derived.ok() || derived->empty()) return true;
      }
      return false;
    });
    if (unfiltered > 0 && entries.empty() && !lex.functions.empty()) {
      diags.push_back({DiagnosticKind::kEmptyDerivationDomain,
                       absl::StrCat("no ", lex.key, " entry has ",
                                    absl::StrJoin(lex.functions, "/"),
                                    " derivations"),
                       lex.offset});
    }
    size_t needed = lex.fixed.size();
    for (const std::string& var : lex.rep_vars) {
      for (const RepInfo& rep : space->reps_) {
        if (rep.var == var) needed += rep.lo;
      }
    }
    if (entries.size() < needed && !(entries.empty() && unfiltered > 0 &&
                                     !lex.functions.empty())) {
      diags.push_back({DiagnosticKind::kUnsatisfiableDistinctness,
                       absl::StrFormat("%s needs %d distinct entries, the "
                                       "lexicon has %d",
                                       lex.key, needed, entries.size()),
                       lex.offset});
    }
    space->domains_[lex.key] =
        std::make_shared<const std::vector<LexiconEntry>>(std::move(entries));
  }

  // Numeric groups: connected components over constraints and same-key
  // distinctness.
  const size_t nn = space->num_refs_.size();
  std::vector<size_t> parent(nn);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<size_t(size_t)> find = [&](size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  auto index_of = [&](const std::string& label) { return num_index[label]; };
  for (size_t i = 0; i < nn; ++i) {
    for (size_t j = i + 1; j < nn; ++j) {
      if (space->num_refs_[i].key == space->num_refs_[j].key) {
        parent[find(i)] = find(j);
      }
    }
  }
  for (const Constraint& c : space->constraints_) {
    if (const auto* rhs = std::get_if<std::string>(&c.rhs)) {
      parent[find(index_of(c.lhs))] = find(index_of(*rhs));
    }
  }
  std::vector<std::vector<size_t>> components;
  std::map<size_t, size_t> component_of_root;
  for (size_t i = 0; i < nn; ++i) {
    auto [it, inserted] =
        component_of_root.try_emplace(find(i), components.size());
    if (inserted) components.emplace_back();
    components[it->second].push_back(i);
  }

  // One sub-space per combination of repetition counts.
  std::vector<int> counts;
  for (const RepInfo& rep : space->reps_) counts.push_back(rep.lo);
  std::optional<Diagnostic> numeric_failure;
  bool any_numeric_ok = false;
  while (true) {
    SubSpace sub;
    for (size_t r = 0; r < space->reps_.size(); ++r) {
      sub.counts[space->reps_[r].var] = counts[r];
    }
    u128 size = 1;
    for (const LexKey& lex : space->lex_keys_) {
      LexGroup group;
      group.key = lex.key;
      group.domain = space->domains_[lex.key];
      group.labels = lex.fixed;
      for (const std::string& var : lex.rep_vars) {
        for (int j = 0; j < sub.counts[var]; ++j) {
          group.labels.push_back(ItemLabel(lex.key, var, j));
        }
      }
      group.radix = Arrangements(group.domain->size(), group.labels.size());
      size = SaturatingMul(size, group.radix);
      sub.lex.push_back(std::move(group));
    }
    bool numeric_ok = true;
    for (const std::vector<size_t>& component : components) {
      NumGroup group;
      for (size_t i : component) group.labels.push_back(space->num_refs_[i].label);
      std::vector<const Constraint*> local;
      for (const Constraint& c : space->constraints_) {
        if (std::find(group.labels.begin(), group.labels.end(), c.lhs) !=
            group.labels.end()) {
          local.push_back(&c);
        }
      }
      if (component.size() == 1 && local.empty()) {
        const NumRef& ref = space->num_refs_[component[0]];
        group.dense = true;
        group.lo = ref.range.lo;
        group.size = static_cast<uint64_t>(ref.range.Size());
      } else if (!enumerate_numeric) {
        group.size = 1;
      } else {
        u128 product = 1;
        for (size_t i : component) {
          product = SaturatingMul(product, space->num_refs_[i].range.Size());
        }
        if (product > kMaxNumericProduct) {
          numeric_failure = Diagnostic{
              DiagnosticKind::kUnsatisfiableConstraint,
              absl::StrCat("numeric slots ", absl::StrJoin(group.labels, ","),
                           " span too many combinations to enumerate"),
              local.empty() ? size_t{0} : local[0]->offset};
          numeric_ok = false;
          group.size = 0;
        } else {
          const size_t arity = component.size();
          std::vector<int64_t> values(arity);
          for (size_t j = 0; j < arity; ++j) {
            values[j] = space->num_refs_[component[j]].range.lo;
          }
          std::map<std::string, int64_t> named;
          while (true) {
            bool ok = true;
            for (size_t a = 0; a < arity && ok; ++a) {
              for (size_t b = a + 1; b < arity && ok; ++b) {
                if (space->num_refs_[component[a]].key ==
                        space->num_refs_[component[b]].key &&
                    values[a] == values[b]) {
                  ok = false;
                }
              }
            }
            if (ok) {
              for (size_t j = 0; j < arity; ++j) {
                named[group.labels[j]] = values[j];
              }
              for (const Constraint* c : local) {
                if (!Compare(named[c->lhs], c->op,
                             space->ConstraintRhs(*c, named, sub.counts))) {
                  ok = false;
                  break;
                }
              }
            }
            if (ok) {
              group.tuples.insert(group.tuples.end(), values.begin(),
                                  values.end());
            }
            size_t pos = arity;
            while (pos > 0) {
              const NumericRange& range = space->num_refs_[component[pos - 1]].range;
              if (values[pos - 1] < range.hi) {
                ++values[pos - 1];
                break;
              }
              values[pos - 1] = range.lo;
              --pos;
            }
            if (pos == 0) break;
          }
          group.size = group.tuples.size() / arity;
          if (group.size == 0) {
            numeric_ok = false;
            if (!numeric_failure) {
              numeric_failure = Diagnostic{
                  local.empty() ? DiagnosticKind::kUnsatisfiableDistinctness
                                : DiagnosticKind::kUnsatisfiableConstraint,
                  absl::StrCat("no values satisfy the constraints on ",
                               absl::StrJoin(group.labels, ",")),
                  local.empty() ? size_t{0} : local[0]->offset};
            }
          }
        }
      }
      size = SaturatingMul(size, group.size);
      sub.num.push_back(std::move(group));
    }
    if (numeric_ok) any_numeric_ok = true;
    for (const auto& [key, branches] : space->alternations_) {
      size = SaturatingMul(size, branches);
    }
    if (size > kU64Max) {
      sub.saturated = true;
      sub.size = ~uint64_t{0};
    } else {
      sub.size = static_cast<uint64_t>(size);
    }
    space->subspaces_.push_back(std::move(sub));

    size_t r = 0;
    for (; r < counts.size(); ++r) {
      if (counts[r] < space->reps_[r].hi) {
        ++counts[r];
        break;
      }
      counts[r] = space->reps_[r].lo;
    }
    if (r == counts.size()) break;
  }
  if (!any_numeric_ok && numeric_failure) diags.push_back(*numeric_failure);
  return space;
}

absl::Status BindingSpace::Check(const Binding& binding) const {
  const SubSpace* sub = nullptr;
  for (const SubSpace& candidate : subspaces_) {
    if (candidate.counts == binding.counts) sub = &candidate;
  }
  if (sub == nullptr) {
    return absl::InvalidArgumentError("repetition counts outside their range");
  }
  for (const LexGroup& group : sub->lex) {
    std::set<std::string> surfaces;
    for (const std::string& label : group.labels) {
      auto it = binding.assignments.find(label);
      if (it == binding.assignments.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("binding lacks ", label));
      }
      const auto* entry = std::get_if<LexiconEntry>(&it->second);
      if (entry == nullptr ||
          std::find(group.domain->begin(), group.domain->end(), *entry) ==
              group.domain->end()) {
        return absl::InvalidArgumentError(
            absl::StrCat(label, " is not an admissible ", group.key,
                         " entry"));
      }
      if (!surfaces.insert(entry->surface).second) {
        return absl::InvalidArgumentError(absl::StrCat(
            "distinct ", group.key, " slots share '", entry->surface, "'"));
      }
    }
  }
  std::map<std::string, int64_t> values;
  std::map<std::string, std::set<int64_t>> per_key;
  for (const NumRef& ref : num_refs_) {
    auto it = binding.assignments.find(ref.label);
    if (it == binding.assignments.end() ||
        !std::holds_alternative<int64_t>(it->second)) {
      return absl::InvalidArgumentError(
          absl::StrCat("binding lacks numeric ", ref.label));
    }
    int64_t v = std::get<int64_t>(it->second);
    if (v < ref.range.lo || v > ref.range.hi) {
      return absl::InvalidArgumentError(
          absl::StrCat(ref.label, "=", v, " outside its range"));
    }
    if (!per_key[ref.key].insert(v).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("distinct ", ref.key, " slots share ", v));
    }
    values[ref.label] = v;
  }
  for (const Constraint& c : constraints_) {
    if (!Compare(values[c.lhs], c.op, ConstraintRhs(c, values, binding.counts))) {
      return absl::InvalidArgumentError(
          absl::StrCat("constraint on ", c.lhs, " violated"));
    }
  }
  for (const auto& [key, branches] : alternations_) {
    auto it = binding.choices.find(key);
    if (it == binding.choices.end() || it->second < 0 ||
        it->second >= branches) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad alternation choice for ", key));
    }
  }
  return absl::OkStatus();
}

namespace {

absl::StatusOr<std::shared_ptr<const BindingSpace>> BuildOrError(
    const TemplateAst& ast, const LexiconStore& store,
    bool enumerate_numeric = true) {
  std::vector<Diagnostic> diags;
  std::shared_ptr<BindingSpace> space =
      BindingSpace::Build(ast, store, diags, enumerate_numeric);
  if (space == nullptr) {
    std::vector<std::string> messages;
    for (const Diagnostic& d : diags) {
      if (IsHardDiagnostic(d.kind)) messages.push_back(d.message);
    }
    return absl::InvalidArgumentError(absl::StrCat(
        "template ", ast.id, ": ", absl::StrJoin(messages, "; ")));
  }
  return space;
}

struct Piece {
  std::string text;
  const LexiconEntry* entry = nullptr;
  bool article = false;
  bool capital = false;
};

class Renderer {
 public:
  Renderer(const Binding& binding, const LexiconStore& store)
      : binding_(binding), store_(store) {}

  absl::StatusOr<std::string> Render(const std::vector<Slot>& slots) {
    pieces_.clear();
    if (absl::Status s = RenderSlots(slots, "", -1); !s.ok()) return s;
    for (size_t k = 0; k < pieces_.size(); ++k) {
      if (!pieces_[k].article) continue;
      std::optional<std::string_view> article = ResolveArticle(k);
      if (!article) {
        return absl::InvalidArgumentError("{a/an} is not followed by a word");
      }
      pieces_[k].text = std::string(*article);
      if (pieces_[k].capital) {
        pieces_[k].text[0] = absl::ascii_toupper(pieces_[k].text[0]);
      }
    }
    std::string out;
    for (const Piece& piece : pieces_) out += piece.text;
    return out;
  }

 private:
  std::optional<std::string_view> ResolveArticle(size_t k) const {
    for (size_t m = k + 1; m < pieces_.size(); ++m) {
      const Piece& piece = pieces_[m];
      if (piece.article) return std::nullopt;
      size_t start = piece.text.find_first_not_of(' ');
      if (start == std::string::npos) continue;
      if (start == 0 && piece.entry != nullptr) {
        return SelectArticle(*piece.entry);
      }
      std::string word;
      for (size_t q = m; q < pieces_.size(); ++q) {
        std::string_view text = pieces_[q].text;
        if (q == m) text.remove_prefix(start);
        size_t stop = text.find(' ');
        word += std::string(text.substr(0, stop));
        if (stop != std::string_view::npos) break;
      }
      return SelectArticle(word);
    }
    return std::nullopt;
  }

  absl::StatusOr<const BoundValue*> Lookup(const SlotRef& ref,
                                           int iteration) const {
    std::string label = ref.rep_var.empty()
                            ? ref.Spelling()
                            : ItemLabel(ref.key, ref.rep_var, iteration);
    auto it = binding_.assignments.find(label);
    if (it == binding_.assignments.end()) {
      return absl::InvalidArgumentError(absl::StrCat("binding lacks ", label));
    }
    return &it->second;
  }

  absl::Status RenderRef(const SlotRef& ref, int iteration) {
    absl::StatusOr<const BoundValue*> value = Lookup(ref, iteration);
    if (!value.ok()) return value.status();
    Piece piece;
    piece.text = BoundSurface(**value);
    if (const auto* entry = std::get_if<LexiconEntry>(*value)) {
      piece.entry = entry;
    }
    pieces_.push_back(std::move(piece));
    return absl::OkStatus();
  }

  absl::Status RenderDerivation(const Slot& slot, int iteration) {
    absl::StatusOr<const BoundValue*> value = Lookup(slot.ref, iteration);
    if (!value.ok()) return value.status();
    const std::string source = BoundSurface(**value);
    absl::StatusOr<std::vector<std::string>> derived =
        store_.Derive(slot.function, source);
    if (!derived.ok()) return derived.status();
    if (derived->empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          slot.function, "(", source, ") has no derivation"));
    }
    pieces_.push_back({derived->front()});
    return absl::OkStatus();
  }

  absl::Status RenderSlots(const std::vector<Slot>& slots,
                           const std::string& rep_var, int iteration) {
    for (const Slot& slot : slots) {
      switch (slot.kind) {
        case SlotKind::kLiteral:
          pieces_.push_back({slot.text});
          break;
        case SlotKind::kPlaceholder:
        case SlotKind::kNumeric:
          if (absl::Status s = RenderRef(slot.ref, iteration); !s.ok()) {
            return s;
          }
          break;
        case SlotKind::kDerivation:
          if (absl::Status s = RenderDerivation(slot, iteration); !s.ok()) {
            return s;
          }
          break;
        case SlotKind::kAlternation: {
          std::string key = slot.group.empty()
                                ? absl::StrCat("#", free_alternations_++)
                                : slot.group;
          auto it = binding_.choices.find(key);
          if (it == binding_.choices.end() || it->second < 0 ||
              it->second >= static_cast<int>(slot.branches.size())) {
            return absl::InvalidArgumentError(
                absl::StrCat("binding lacks a choice for ", key));
          }
          const Slot& branch = slot.branches[it->second];
          absl::Status s = absl::OkStatus();
          if (branch.kind == SlotKind::kPlaceholder) {
            s = RenderRef(branch.ref, iteration);
          } else if (branch.kind == SlotKind::kDerivation) {
            s = RenderDerivation(branch, iteration);
          } else {
            pieces_.push_back({branch.text});
          }
          if (!s.ok()) return s;
          break;
        }
        case SlotKind::kRepetition: {
          auto it = binding_.counts.find(slot.rep_var);
          if (it == binding_.counts.end()) {
            return absl::InvalidArgumentError(
                absl::StrCat("binding lacks count(", slot.rep_var, ")"));
          }
          const int saved = free_alternations_;
          for (int j = 0; j < it->second; ++j) {
            if (j > 0) {
              bool last = j == it->second - 1 && slot.last_separator;
              pieces_.push_back(
                  {last ? *slot.last_separator : slot.separator});
            }
            free_alternations_ = saved;
            if (absl::Status s = RenderSlots(slot.body, slot.rep_var, j);
                !s.ok()) {
              return s;
            }
          }
          free_alternations_ = saved + CountFree(slot.body);
          break;
        }
        case SlotKind::kCountRef: {
          auto it = binding_.counts.find(slot.rep_var);
          if (it == binding_.counts.end()) {
            return absl::InvalidArgumentError(
                absl::StrCat("binding lacks count(", slot.rep_var, ")"));
          }
          pieces_.push_back({absl::StrCat(it->second)});
          break;
        }
        case SlotKind::kArticle: {
          Piece piece;
          piece.article = true;
          piece.capital = slot.text == "A/An";
          pieces_.push_back(std::move(piece));
          break;
        }
      }
    }
    (void)rep_var;
    return absl::OkStatus();
  }

  static int CountFree(const std::vector<Slot>& slots) {
    int n = 0;
    for (const Slot& slot : slots) {
      if (slot.kind == SlotKind::kAlternation && slot.group.empty()) ++n;
    }
    return n;
  }

 public:
  int free_alternations_ = 0;

 private:
  const Binding& binding_;
  const LexiconStore& store_;
  std::vector<Piece> pieces_;
};

}  // namespace

std::vector<Diagnostic> Validate(const TemplateAst& ast,
                                 const LexiconStore& store) {
  std::vector<Diagnostic> diags;
  BindingSpace::Build(ast, store, diags);
  return diags;
}

absl::StatusOr<GeneratedExample> Instantiate(const TemplateAst& ast,
                                             const Binding& binding,
                                             const LexiconStore& store) {
  Renderer renderer(binding, store);
  absl::StatusOr<std::string> premise = renderer.Render(ast.premise);
  if (!premise.ok()) return premise.status();
  absl::StatusOr<std::string> hypothesis = renderer.Render(ast.hypothesis);
  if (!hypothesis.ok()) return hypothesis.status();
  GeneratedExample example;
  example.template_id = ast.id;
  example.capability = ast.capability;
  example.premise = *std::move(premise);
  example.hypothesis = *std::move(hypothesis);
  example.gold = ast.Gold();
  example.gold_confidence = ast.GoldConfidence();
  example.binding = binding.SurfaceMap();
  example.full_binding = binding;
  return example;
}

absl::Status CheckBinding(const TemplateAst& ast, const Binding& binding,
                          const LexiconStore& store) {
  absl::StatusOr<std::shared_ptr<const BindingSpace>> space =
      BuildOrError(ast, store, /*enumerate_numeric=*/false);
  if (!space.ok()) return space.status();
  return (*space)->Check(binding);
}

absl::StatusOr<SpaceCount> CountSpace(const TemplateAst& ast,
                                      const LexiconStore& store) {
  absl::StatusOr<std::shared_ptr<const BindingSpace>> space =
      BuildOrError(ast, store);
  if (!space.ok()) return space.status();
  return (*space)->Total();
}

struct BindingStream::State {
  struct Cursor {
    FeistelPermutation permutation;
    uint64_t position = 0;
  };
  std::vector<Cursor> cursors;
  std::mt19937_64 rng;
  bool sampling = false;
  std::unordered_set<std::string> seen;
};

BindingStream::BindingStream(std::shared_ptr<const BindingSpace> space,
                             uint64_t seed)
    : space_(std::move(space)), state_(std::make_unique<State>()) {
  state_->rng.seed(SplitMix64(seed ^ 0x5eedULL));
  uint64_t sub_seed = seed;
  for (const auto& sub : space_->subspaces()) {
    sub_seed = SplitMix64(sub_seed);
    state_->cursors.push_back({FeistelPermutation(sub.size, sub_seed), 0});
    if (sub.saturated) state_->sampling = true;
  }
}

BindingStream::~BindingStream() = default;
BindingStream::BindingStream(BindingStream&&) noexcept = default;
BindingStream& BindingStream::operator=(BindingStream&&) noexcept = default;

std::optional<Binding> BindingStream::Next() {
  const auto& subs = space_->subspaces();
  if (state_->sampling) {
    std::vector<size_t> live;
    for (size_t i = 0; i < subs.size(); ++i) {
      if (subs[i].size > 0) live.push_back(i);
    }
    if (live.empty()) return std::nullopt;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      size_t pick = live[state_->rng() % live.size()];
      Binding binding = space_->Sample(subs[pick], state_->rng);
      std::string key;
      for (const auto& [label, surface] : binding.SurfaceMap()) {
        absl::StrAppend(&key, label, "=", surface, "\x1f");
      }
      for (const auto& [group, choice] : binding.choices) {
        absl::StrAppend(&key, group, ":", choice, "\x1f");
      }
      if (state_->seen.insert(key).second) return binding;
    }
    return std::nullopt;
  }
  std::vector<size_t> live;
  for (size_t i = 0; i < subs.size(); ++i) {
    if (state_->cursors[i].position < subs[i].size) live.push_back(i);
  }
  if (live.empty()) return std::nullopt;
  size_t pick =
      live.size() == 1 ? live[0] : live[state_->rng() % live.size()];
  State::Cursor& cursor = state_->cursors[pick];
  uint64_t index = cursor.permutation.Map(cursor.position++);
  return space_->Decode(subs[pick], index);
}

absl::StatusOr<BindingStream> EnumerateBindings(const TemplateAst& ast,
                                                const LexiconStore& store,
                                                uint64_t seed) {
  absl::StatusOr<std::shared_ptr<const BindingSpace>> space =
      BuildOrError(ast, store);
  if (!space.ok()) return space.status();
  return BindingStream(*std::move(space), seed);
}

uint64_t TemplateSeed(uint64_t seed, std::string_view template_id) {
  return SplitMix64(seed ^ Fnv1a(template_id));
}

std::string CorpusHash(const std::vector<TemplateAst>& templates) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (const TemplateAst& ast : templates) {
    hash = Fnv1a(Serialize(ast), hash);
    hash = Fnv1a("\n", hash);
  }
  return absl::StrFormat("%016x", hash);
}

absl::StatusOr<SuiteDataset> GenerateSuite(
    const std::vector<TemplateAst>& templates, const LexiconStore& store,
    const GenerationOptions& options) {
  struct Result {
    absl::Status status;
    std::vector<GeneratedExample> examples;
    TemplateGenerationReport report;
  };
  std::vector<Result> results(templates.size());
  auto run = [&](size_t t) {
    const TemplateAst& ast = templates[t];
    Result& result = results[t];
    result.report.template_id = ast.id;
    uint64_t target =
        ast.capability.group == CapabilityGroup::kKnowledge
            ? options.knowledge_target
            : options.default_target;
    if (auto it = options.per_template.find(ast.id);
        it != options.per_template.end()) {
      target = it->second;
    }
    result.report.requested = target;
    std::vector<Diagnostic> diags;
    std::shared_ptr<BindingSpace> space = BindingSpace::Build(ast, store, diags);
    if (space == nullptr) {
      result.status = BuildOrError(ast, store).status();
      return;
    }
    SpaceCount count = space->Total();
    result.report.space = count.value;
    result.report.space_saturated = count.saturated;
    BindingStream stream(space, TemplateSeed(options.seed, ast.id));
    std::set<std::pair<std::string, std::string>> pairs;
    uint64_t duplicates = 0;
    while (result.examples.size() < target) {
      std::optional<Binding> binding = stream.Next();
      if (!binding) break;
      absl::StatusOr<GeneratedExample> example =
          Instantiate(ast, *binding, store);
      if (!example.ok()) {
        result.status = absl::Status(
            example.status().code(),
            absl::StrCat("template ", ast.id, ": ", example.status().message()));
        return;
      }
      if (!pairs.emplace(example->premise, example->hypothesis).second) {
        ++duplicates;
        continue;
      }
      example->example_id =
          absl::StrCat(ast.id, "#", result.examples.size());
      result.examples.push_back(*std::move(example));
    }
    result.report.produced = result.examples.size();
    std::vector<std::string> notes;
    if (result.report.produced < target) {
      notes.push_back(absl::StrCat("shortfall: ", result.report.produced,
                                   " of ", target, " (space ",
                                   count.saturated ? std::string(">2^64")
                                                   : absl::StrCat(count.value),
                                   ")"));
    }
    for (const Diagnostic& d : diags) notes.push_back(d.message);
    if (duplicates > 0) {
      notes.push_back(
          absl::StrCat(duplicates, " bindings rendered duplicate pairs"));
    }
    result.report.note = absl::StrJoin(notes, "; ");
  };

  int threads = options.threads > 0
                    ? options.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp<int>(threads, 1,
                            std::max<int>(1, static_cast<int>(templates.size())));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t t = next++; t < templates.size(); t = next++) run(t);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  SuiteDataset suite;
  suite.metadata.seed = options.seed;
  suite.metadata.corpus_hash = CorpusHash(templates);
  for (Result& result : results) {
    if (!result.status.ok()) return result.status;
    for (GeneratedExample& example : result.examples) {
      suite.examples.push_back(std::move(example));
    }
    suite.metadata.report.push_back(std::move(result.report));
  }
  suite.RebuildIndex();
  return suite;
}

}  // namespace nlicheck
