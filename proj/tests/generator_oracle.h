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

// Independent oracles for template instantiation: a reduced lexicon store,
// a backtracking enumerator of valid bindings, and the worked-example
// fixtures.

#ifndef NLICHECK_TESTS_GENERATOR_ORACLE_H_
#define NLICHECK_TESTS_GENERATOR_ORACLE_H_

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "nlicheck/labels.h"
#include "nlicheck/lexicon.h"
#include "nlicheck/suite.h"
#include "nlicheck/template_ast.h"
#include "nlohmann/json.hpp"

namespace nlicheck::testing {

// "label=surface;...|group=choice;...|var=count;..." with every map sorted.
inline std::string CanonicalBinding(
    const std::map<std::string, std::string>& surfaces,
    const std::map<std::string, int>& choices,
    const std::map<std::string, int>& counts) {
  std::string out;
  for (const auto& [k, v] : surfaces) absl::StrAppend(&out, k, "=", v, ";");
  out += "|";
  for (const auto& [k, v] : choices) absl::StrAppend(&out, k, "=", v, ";");
  out += "|";
  for (const auto& [k, v] : counts) absl::StrAppend(&out, k, "=", v, ";");
  return out;
}

inline std::string CanonicalBinding(const Binding& binding) {
  std::map<std::string, std::string> surfaces;
  for (const auto& [label, value] : binding.assignments) {
    surfaces[label] = BoundSurface(value);
  }
  return CanonicalBinding(surfaces, binding.choices, binding.counts);
}

// Lexicon key behind a binding label: "NAME2" -> NAME, "NAME@i[3]" -> NAME.
inline std::string KeyOfLabel(const std::string& label) {
  size_t at = label.find('@');
  if (at != std::string::npos) return label.substr(0, at);
  size_t end = label.size();
  while (end > 0 && std::isdigit(static_cast<unsigned char>(label[end - 1]))) {
    --end;
  }
  return label.substr(0, end);
}

// Rebuilds `store` as lexicon text keeping, for every list, the first
// `per_signature` entries of each attribute signature (entries covered by
// more derivations first), every alias, the derivations of kept entries and
// each numeric range clipped to `range_width` values.
inline absl::StatusOr<LexiconStore> ReducedStore(const LexiconStore& store,
                                                 int per_signature,
                                                 int64_t range_width) {
  std::ostringstream text;
  std::set<std::string> kept;
  for (const auto& [key, entries] : store.lists()) {
    auto coverage = [&](const LexiconEntry& e) {
      int n = 0;
      for (const auto& [fn, table] : store.derivations()) {
        n += table.contains(e.surface) ? 1 : 0;
      }
      return n;
    };
    std::vector<const LexiconEntry*> order;
    for (const LexiconEntry& e : entries) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(),
                     [&](const LexiconEntry* a, const LexiconEntry* b) {
                       return coverage(*a) > coverage(*b);
                     });
    std::map<std::map<std::string, std::string>, int> taken;
    text << "[" << key << "]\n";
    for (const LexiconEntry* e : order) {
      if (taken[e->attributes]++ >= per_signature) continue;
      text << e->surface;
      for (const auto& [name, value] : e->attributes) {
        text << " | " << name << "=" << value;
      }
      text << "\n";
      kept.insert(e->surface);
    }
  }
  for (const auto& [key, range] : store.ranges()) {
    text << "[" << key << " range=" << range.lo << ".."
         << std::min(range.hi, range.lo + range_width - 1) << "]\n";
  }
  for (const auto& [key, alias] : store.aliases()) {
    text << "[" << key << " alias=" << alias.base;
    if (alias.filter) text << " " << alias.filter->name << "=" << alias.filter->value;
    text << "]\n";
  }
  for (const auto& [fn, table] : store.derivations()) {
    text << "[derivation:" << fn << "]\n";
    for (const auto& [source, targets] : table) {
      if (!kept.contains(source)) continue;
      text << source << " ->";
      for (size_t i = 0; i < targets.size(); ++i) {
        text << (i == 0 ? " " : ", ") << targets[i];
      }
      text << "\n";
    }
  }
  return ParseLexicon(text.str(), "reduced.lex");
}

// Every valid binding of `ast` over `store`, in canonical form, found by
// walking the AST and backtracking over the full Cartesian space with the
// distinctness rules applied per key.
inline absl::StatusOr<std::set<std::string>> BruteForceBindings(
    const TemplateAst& ast, const LexiconStore& store) {
  std::map<std::string, std::vector<std::string>> fixed;  // key -> labels
  std::map<std::string, std::pair<int, int>> reps;
  std::map<std::string, std::vector<std::string>> rep_keys;  // var -> keys
  std::map<std::string, std::set<std::string>> functions;
  struct Cmp {
    std::string lhs;
    CompareOp op;
    std::variant<SlotRef, int64_t, CountRef> rhs;
  };
  std::vector<Cmp> cmps;
  std::vector<std::pair<std::string, int>> alternations;
  int free = 0;

  auto add_ref = [&](const SlotRef& ref) {
    if (!ref.rep_var.empty()) {
      auto& keys = rep_keys[ref.rep_var];
      if (std::find(keys.begin(), keys.end(), ref.key) == keys.end()) {
        keys.push_back(ref.key);
      }
      return;
    }
    auto& labels = fixed[ref.key];
    if (std::find(labels.begin(), labels.end(), ref.Spelling()) ==
        labels.end()) {
      labels.push_back(ref.Spelling());
    }
  };
  auto add_derivation = [&](const Slot& slot) {
    add_ref(slot.ref);
    if (slot.function != kCapitalizeDerivation) {
      functions[slot.ref.key].insert(slot.function);
    }
  };
  std::function<void(const std::vector<Slot>&)> walk =
      [&](const std::vector<Slot>& slots) {
        for (const Slot& slot : slots) {
          switch (slot.kind) {
            case SlotKind::kPlaceholder:
              add_ref(slot.ref);
              break;
            case SlotKind::kDerivation:
              add_derivation(slot);
              break;
            case SlotKind::kNumeric:
              add_ref(slot.ref);
              if (const auto* r = std::get_if<SlotRef>(&slot.constraint->rhs)) {
                add_ref(*r);
              }
              cmps.push_back(
                  {slot.ref.Spelling(), slot.constraint->op, slot.constraint->rhs});
              break;
            case SlotKind::kAlternation: {
              std::string key =
                  slot.group.empty() ? absl::StrCat("#", free++) : slot.group;
              bool seen = false;
              for (const auto& [k, n] : alternations) seen |= k == key;
              if (!seen) {
                alternations.emplace_back(key,
                                          static_cast<int>(slot.branches.size()));
              }
              for (const Slot& b : slot.branches) {
                if (b.kind == SlotKind::kPlaceholder) add_ref(b.ref);
                if (b.kind == SlotKind::kDerivation) add_derivation(b);
              }
              break;
            }
            case SlotKind::kRepetition:
              reps[slot.rep_var] = {slot.rep_lo, slot.rep_hi};
              walk(slot.body);
              break;
            default:
              break;
          }
        }
      };
  walk(ast.premise);
  walk(ast.hypothesis);

  // Candidate surfaces per key.
  std::map<std::string, std::vector<std::string>> domain;
  std::set<std::string> all_keys;
  for (const auto& [k, v] : fixed) all_keys.insert(k);
  for (const auto& [var, keys] : rep_keys) all_keys.insert(keys.begin(), keys.end());
  for (const std::string& key : all_keys) {
    if (store.IsNumeric(key)) {
      NumericRange r = *store.Range(key);
      for (int64_t v = r.lo; v <= r.hi; ++v) domain[key].push_back(absl::StrCat(v));
      continue;
    }
    absl::StatusOr<std::vector<LexiconEntry>> entries = store.Lookup(key);
    if (!entries.ok()) return entries.status();
    for (const LexiconEntry& e : *entries) {
      bool covered = true;
      for (const std::string& fn : functions[key]) {
        absl::StatusOr<std::vector<std::string>> d = store.Derive(fn, e.surface);
        covered &= d.ok() && !d->empty();
      }
      if (covered) domain[key].push_back(e.surface);
    }
  }

  std::set<std::string> out;
  std::vector<std::string> vars;
  for (const auto& [var, range] : reps) vars.push_back(var);
  std::map<std::string, int> counts;
  std::function<void(size_t)> over_counts = [&](size_t v) {
    if (v < vars.size()) {
      for (int c = reps[vars[v]].first; c <= reps[vars[v]].second; ++c) {
        counts[vars[v]] = c;
        over_counts(v + 1);
      }
      return;
    }
    // Labels to fill, grouped by key for distinctness.
    std::vector<std::pair<std::string, std::string>> slots;  // label, key
    for (const auto& [key, labels] : fixed) {
      for (const std::string& l : labels) slots.emplace_back(l, key);
    }
    for (const auto& [var, keys] : rep_keys) {
      for (const std::string& key : keys) {
        for (int j = 0; j < counts[var]; ++j) {
          slots.emplace_back(absl::StrCat(key, "@", var, "[", j, "]"), key);
        }
      }
    }
    std::map<std::string, std::string> surfaces;
    std::map<std::string, std::set<std::string>> used;
    std::function<void(size_t)> fill = [&](size_t i) {
      if (i < slots.size()) {
        const auto& [label, key] = slots[i];
        for (const std::string& s : domain[key]) {
          if (used[key].contains(s)) continue;
          used[key].insert(s);
          surfaces[label] = s;
          fill(i + 1);
          used[key].erase(s);
        }
        surfaces.erase(label);
        return;
      }
      for (const Cmp& c : cmps) {
        int64_t lhs = std::stoll(surfaces[c.lhs]);
        int64_t rhs = 0;
        if (const auto* r = std::get_if<SlotRef>(&c.rhs)) {
          rhs = std::stoll(surfaces[r->Spelling()]);
        } else if (const auto* k = std::get_if<int64_t>(&c.rhs)) {
          rhs = *k;
        } else {
          rhs = counts[std::get<CountRef>(c.rhs).var];
        }
        if (!Compare(lhs, c.op, rhs)) return;
      }
      std::map<std::string, int> choices;
      std::function<void(size_t)> choose = [&](size_t a) {
        if (a == alternations.size()) {
          out.insert(CanonicalBinding(surfaces, choices, counts));
          return;
        }
        for (int b = 0; b < alternations[a].second; ++b) {
          choices[alternations[a].first] = b;
          choose(a + 1);
        }
      };
      choose(0);
    };
    fill(0);
  };
  over_counts(0);
  return out;
}

struct WorkedExample {
  std::string template_id;
  Binding binding;
  std::string premise;
  std::string hypothesis;
  Label gold = Label::kEntailment;
  bool ambiguous = false;
};

// Resolves surfaces to lexicon entries of the label's key.
inline absl::StatusOr<std::vector<WorkedExample>> LoadWorkedExamples(
    const std::string& path, const LexiconStore& store) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(path);
  nlohmann::json doc = nlohmann::json::parse(in);
  std::vector<WorkedExample> out;
  for (const nlohmann::json& item : doc) {
    WorkedExample ex;
    ex.template_id = item.at("template").get<std::string>();
    ex.premise = item.at("premise").get<std::string>();
    ex.hypothesis = item.at("hypothesis").get<std::string>();
    ex.gold = *ParseLabel(item.at("gold").get<std::string>());
    ex.ambiguous = item.value("ambiguous", false);
    for (const auto& [label, value] : item.at("binding").items()) {
      const std::string key = KeyOfLabel(label);
      if (value.is_number_integer()) {
        ex.binding.assignments[label] = value.get<int64_t>();
        continue;
      }
      absl::StatusOr<std::vector<LexiconEntry>> entries = store.Lookup(key);
      if (!entries.ok()) return entries.status();
      const std::string surface = value.get<std::string>();
      auto it = std::find_if(entries->begin(), entries->end(),
                             [&](const LexiconEntry& e) {
                               return e.surface == surface;
                             });
      if (it == entries->end()) {
        return absl::NotFoundError(
            absl::StrCat(surface, " is not a ", key, " entry"));
      }
      ex.binding.assignments[label] = *it;
    }
    if (item.contains("choices")) {
      for (const auto& [k, v] : item["choices"].items()) {
        ex.binding.choices[k] = v.get<int>();
      }
    }
    if (item.contains("counts")) {
      for (const auto& [k, v] : item["counts"].items()) {
        ex.binding.counts[k] = v.get<int>();
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace nlicheck::testing

#endif  // NLICHECK_TESTS_GENERATOR_ORACLE_H_
