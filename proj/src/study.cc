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

#include "nlicheck/study.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "io_util.h"

namespace nlicheck {

namespace {

using ordered_json = nlohmann::ordered_json;

uint64_t Mix(uint64_t seed, std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  uint64_t x = seed ^ h;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-bin quotas summing to n: proportional to bin size with every
// non-empty bin getting one, capped by the bin size. Largest remainders
// decide the rounding.
std::array<size_t, 5> BinQuotas(const std::array<size_t, 5>& sizes, size_t n) {
  std::array<size_t, 5> quota = {0, 0, 0, 0, 0};
  size_t total = 0;
  size_t non_empty = 0;
  for (size_t s : sizes) {
    total += s;
    non_empty += s > 0 ? 1 : 0;
  }
  if (n < non_empty) {
    // Not enough picks for every bin: one each for the n largest bins.
    std::array<int, 5> order = {0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sizes[a] > sizes[b]; });
    for (size_t i = 0; i < n; ++i) quota[order[i]] = 1;
    return quota;
  }
  std::array<double, 5> target{};
  size_t assigned = 0;
  for (int b = 0; b < 5; ++b) {
    if (sizes[b] == 0) continue;
    target[b] = static_cast<double>(n) * sizes[b] / total;
    quota[b] = std::clamp<size_t>(static_cast<size_t>(std::floor(target[b])),
                                  1, sizes[b]);
    assigned += quota[b];
  }
  while (assigned > n) {
    int best = -1;
    for (int b = 0; b < 5; ++b) {
      if (quota[b] <= 1) continue;
      if (best < 0 || quota[b] - target[b] > quota[best] - target[best]) {
        best = b;
      }
    }
    --quota[best];
    --assigned;
  }
  while (assigned < n) {
    int best = -1;
    for (int b = 0; b < 5; ++b) {
      if (quota[b] >= sizes[b]) continue;
      if (best < 0 || target[b] - quota[b] > target[best] - quota[best]) {
        best = b;
      }
    }
    ++quota[best];
    ++assigned;
  }
  return quota;
}

std::vector<int> BlockedOrder(const std::vector<int>& counts,
                              std::mt19937_64& rng) {
  std::vector<int> remaining = counts;
  int left = 0;
  for (int c : remaining) left += c;
  std::vector<int> order;
  int previous = -1;
  while (left > 0) {
    // A group holding more than half of what is left (rounded up) must go
    // now, or it can no longer be kept apart.
    int forced = -1;
    for (size_t g = 0; g < remaining.size(); ++g) {
      if (static_cast<int>(g) != previous && 2 * remaining[g] > left) {
        forced = static_cast<int>(g);
      }
    }
    int pick = forced;
    if (pick < 0) {
      int pool = 0;
      for (size_t g = 0; g < remaining.size(); ++g) {
        if (static_cast<int>(g) != previous) pool += remaining[g];
      }
      if (pool == 0) return {};
      int draw = static_cast<int>(rng() % static_cast<uint64_t>(pool));
      for (size_t g = 0; g < remaining.size(); ++g) {
        if (static_cast<int>(g) == previous) continue;
        if (draw < remaining[g]) {
          pick = static_cast<int>(g);
          break;
        }
        draw -= remaining[g];
      }
    }
    order.push_back(pick);
    --remaining[pick];
    --left;
    previous = pick;
  }
  return order;
}

}  // namespace

absl::StatusOr<std::vector<std::string>> SelectTestTemplates(
    const CapabilityReport& report, size_t n, uint64_t seed) {
  std::vector<const TemplateVerdict*> eligible;
  for (const TemplateVerdict& v : report.verdicts) {
    if (v.status != TemplateStatus::kAmbiguousExcluded) eligible.push_back(&v);
  }
  if (eligible.size() < n) {
    return absl::FailedPreconditionError(
        absl::StrCat("report has ", eligible.size(),
                     " non-ambiguous templates, ", n, " requested"));
  }
  std::mt19937_64 rng(seed);
  std::array<std::vector<const TemplateVerdict*>, 5> bins;
  for (const TemplateVerdict* v : eligible) {
    bins[HistogramBin(v->accuracy)].push_back(v);
  }
  std::array<size_t, 5> sizes{};
  for (int b = 0; b < 5; ++b) sizes[b] = bins[b].size();
  const std::array<size_t, 5> quota = BinQuotas(sizes, n);

  std::set<std::string> chosen;
  std::array<std::vector<const TemplateVerdict*>, 5> picked;
  for (int b = 0; b < 5; ++b) {
    std::vector<const TemplateVerdict*> shuffled = bins[b];
    SeededShuffle(shuffled, rng);
    // Round-robin over capabilities, in order of first appearance.
    std::vector<std::string> caps;
    std::map<std::string, std::vector<const TemplateVerdict*>> by_cap;
    for (const TemplateVerdict* v : shuffled) {
      if (!by_cap.contains(v->capability.name)) {
        caps.push_back(v->capability.name);
      }
      by_cap[v->capability.name].push_back(v);
    }
    std::map<std::string, size_t> cursor;
    while (picked[b].size() < quota[b]) {
      for (const std::string& cap : caps) {
        if (picked[b].size() >= quota[b]) break;
        size_t& c = cursor[cap];
        if (c < by_cap[cap].size()) {
          picked[b].push_back(by_cap[cap][c++]);
          chosen.insert(picked[b].back()->template_id);
        }
      }
    }
  }

  // Repair: swap in templates of missing capability groups, replacing a
  // template of the best-represented group within the same bin.
  std::set<CapabilityGroup> available;
  for (const TemplateVerdict* v : eligible) available.insert(v->capability.group);
  const size_t wanted_groups = std::min<size_t>({3, available.size(), n});
  auto group_counts = [&] {
    std::map<CapabilityGroup, int> counts;
    for (const auto& bin : picked) {
      for (const TemplateVerdict* v : bin) ++counts[v->capability.group];
    }
    return counts;
  };
  for (int guard = 0; guard < 16; ++guard) {
    std::map<CapabilityGroup, int> counts = group_counts();
    if (counts.size() >= wanted_groups) break;
    bool swapped = false;
    for (CapabilityGroup g : available) {
      if (counts.contains(g) || swapped) continue;
      for (int b = 0; b < 5 && !swapped; ++b) {
        const TemplateVerdict* incoming = nullptr;
        std::vector<const TemplateVerdict*> shuffled = bins[b];
        SeededShuffle(shuffled, rng);
        for (const TemplateVerdict* v : shuffled) {
          if (v->capability.group == g && !chosen.contains(v->template_id)) {
            incoming = v;
            break;
          }
        }
        if (incoming == nullptr) continue;
        int victim = -1;
        for (size_t i = 0; i < picked[b].size(); ++i) {
          CapabilityGroup vg = picked[b][i]->capability.group;
          if (counts[vg] < 2) continue;
          if (victim < 0 ||
              counts[vg] > counts[picked[b][victim]->capability.group]) {
            victim = static_cast<int>(i);
          }
        }
        if (victim < 0) continue;
        chosen.erase(picked[b][victim]->template_id);
        picked[b][victim] = incoming;
        chosen.insert(incoming->template_id);
        swapped = true;
      }
    }
    if (!swapped) break;
  }

  std::vector<std::string> out;
  for (const TemplateVerdict& v : report.verdicts) {
    if (chosen.contains(v.template_id)) out.push_back(v.template_id);
  }
  return out;
}

absl::StatusOr<StudyDefinition> BuildStudy(
    const CapabilityReport& report, const SuiteDataset& suite,
    const std::vector<PredictionRecord>& records, const ExamplePool& pool,
    Predictor& predictor, const StudyBuildOptions& options) {
  std::vector<std::string> template_ids = options.template_ids;
  if (template_ids.empty()) {
    // Templates too small to supply their questions are not candidates.
    CapabilityReport candidates = report;
    std::erase_if(candidates.verdicts, [&](const TemplateVerdict& v) {
      return v.n < static_cast<int64_t>(options.questions_per_template);
    });
    absl::StatusOr<std::vector<std::string>> selected =
        SelectTestTemplates(candidates, options.templates, options.seed);
    if (!selected.ok()) return selected.status();
    template_ids = *std::move(selected);
  }
  if (template_ids.size() < 2 && options.questions_per_template > 1) {
    return absl::FailedPreconditionError(
        "questions from a single template cannot be kept apart");
  }
  std::set<std::string> unique(template_ids.begin(), template_ids.end());
  if (unique.size() != template_ids.size()) {
    return absl::InvalidArgumentError("duplicate template id in the study");
  }

  StudyDefinition study;
  study.study_id = options.study_id;
  study.model_id = predictor.model_id();
  study.pool_id = pool.pool_id;
  study.seed = options.seed;
  study.template_ids = template_ids;

  std::vector<std::vector<const GeneratedExample*>> per_template;
  for (const std::string& id : template_ids) {
    auto it = suite.template_index.find(id);
    if (it == suite.template_index.end() ||
        it->second.size() < options.questions_per_template) {
      return absl::FailedPreconditionError(absl::StrCat(
          "template ", id, " has fewer than ",
          options.questions_per_template, " examples"));
    }
    std::vector<size_t> positions = it->second;
    std::mt19937_64 rng(Mix(options.seed, id));
    for (size_t i = 0; i < options.questions_per_template; ++i) {
      size_t j = i + rng() % (positions.size() - i);
      std::swap(positions[i], positions[j]);
    }
    std::vector<const GeneratedExample*> examples;
    for (size_t i = 0; i < options.questions_per_template; ++i) {
      examples.push_back(&suite.examples[positions[i]]);
    }
    per_template.push_back(std::move(examples));
  }

  std::mt19937_64 order_rng(Mix(options.seed, "question-order"));
  std::vector<int> counts(template_ids.size(),
                          static_cast<int>(options.questions_per_template));
  std::vector<int> order = BlockedOrder(counts, order_rng);
  std::vector<size_t> taken(template_ids.size(), 0);

  const RecordIndex index(records);
  for (size_t q = 0; q < order.size(); ++q) {
    const GeneratedExample& ex = *per_template[order[q]][taken[order[q]]++];
    const PredictionRecord* record = index.Find(ex.example_id);
    if (record == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("no prediction for example ", ex.example_id));
    }
    if (record->model_id != study.model_id) {
      return absl::InvalidArgumentError(absl::StrCat(
          "prediction for ", ex.example_id, " comes from model ",
          record->model_id, ", not ", study.model_id));
    }
    StudyQuestion question;
    question.index = static_cast<int>(q);
    question.example_id = ex.example_id;
    question.template_id = ex.template_id;
    question.premise = ex.premise;
    question.hypothesis = ex.hypothesis;
    question.model_predicted = record->predicted;
    question.gold = ex.gold;
    PanelOptions panel_options = options.panel;
    panel_options.lime.seed = Mix(options.seed, ex.example_id);
    absl::StatusOr<ExplanationPanel> panel =
        BuildPanel(ex, *record, pool, predictor, panel_options);
    if (!panel.ok()) return panel.status();
    question.panel = *std::move(panel);
    study.questions.push_back(std::move(question));
  }
  return study;
}

nlohmann::ordered_json StudyToJson(const StudyDefinition& study) {
  ordered_json j;
  j["study_id"] = study.study_id;
  j["model_id"] = study.model_id;
  j["pool_id"] = study.pool_id;
  j["seed"] = study.seed;
  j["template_ids"] = study.template_ids;
  ordered_json questions = ordered_json::array();
  for (const StudyQuestion& q : study.questions) {
    ordered_json row;
    row["index"] = q.index;
    row["example_id"] = q.example_id;
    row["template_id"] = q.template_id;
    row["premise"] = q.premise;
    row["hypothesis"] = q.hypothesis;
    row["model_predicted"] = std::string(LabelName(q.model_predicted));
    row["gold"] = std::string(LabelName(q.gold));
    row["panel"] = PanelToJson(q.panel, /*include_ids=*/true);
    questions.push_back(std::move(row));
  }
  j["questions"] = std::move(questions);
  return j;
}

absl::StatusOr<StudyDefinition> StudyFromJson(const nlohmann::json& json) {
  StudyDefinition study;
  try {
    study.study_id = json.at("study_id").get<std::string>();
    study.model_id = json.at("model_id").get<std::string>();
    study.pool_id = json.at("pool_id").get<std::string>();
    study.seed = json.at("seed").get<uint64_t>();
    study.template_ids =
        json.at("template_ids").get<std::vector<std::string>>();
    for (const auto& row : json.at("questions")) {
      StudyQuestion q;
      q.index = row.at("index").get<int>();
      if (q.index != static_cast<int>(study.questions.size())) {
        return absl::InvalidArgumentError(
            absl::StrCat("question ", q.index, " is out of order"));
      }
      q.example_id = row.at("example_id").get<std::string>();
      q.template_id = row.at("template_id").get<std::string>();
      q.premise = row.at("premise").get<std::string>();
      q.hypothesis = row.at("hypothesis").get<std::string>();
      std::optional<Label> predicted =
          ParseLabel(row.at("model_predicted").get<std::string>());
      std::optional<Label> gold = ParseLabel(row.at("gold").get<std::string>());
      if (!predicted || !gold) {
        return absl::InvalidArgumentError(
            absl::StrCat("question ", q.index, " has an unknown label"));
      }
      q.model_predicted = *predicted;
      q.gold = *gold;
      absl::StatusOr<ExplanationPanel> panel = PanelFromJson(row.at("panel"));
      if (!panel.ok()) return panel.status();
      q.panel = *std::move(panel);
      study.questions.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad study: ", e.what()));
  }
  if (study.study_id.empty()) {
    return absl::InvalidArgumentError("study_id is empty");
  }
  return study;
}

nlohmann::ordered_json QuestionPayload(const StudyDefinition& study,
                                       int index) {
  const StudyQuestion& q = study.questions.at(index);
  ordered_json j;
  j["index"] = index;
  j["total"] = study.questions.size();
  j["test_example"] = {{"premise", q.premise}, {"hypothesis", q.hypothesis}};
  ordered_json panel = PanelToJson(q.panel, /*include_ids=*/false);
  panel.erase("test_example");
  j["panel"] = std::move(panel);
  return j;
}

absl::StatusOr<StudyResults> ScoreStudy(
    const std::vector<StudySession>& sessions, const StudyDefinition& study) {
  const int total = static_cast<int>(study.questions.size());
  std::vector<std::string> incomplete;
  for (const StudySession& s : sessions) {
    if (s.study_id != study.study_id) {
      return absl::InvalidArgumentError(absl::StrCat(
          "session ", s.session_id, " belongs to study ", s.study_id));
    }
    bool complete = s.cursor() == total;
    for (int i = 0; complete && i < total; ++i) {
      complete = s.answers[i].index == i;
    }
    if (!complete) incomplete.push_back(s.session_id);
  }
  if (!incomplete.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "incomplete sessions: ", absl::StrJoin(incomplete, ", ")));
  }
  std::vector<const StudySession*> ordered;
  for (const StudySession& s : sessions) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const StudySession* a, const StudySession* b) {
              if (a->participant_id != b->participant_id) {
                return a->participant_id < b->participant_id;
              }
              return a->session_id < b->session_id;
            });

  StudyResults results;
  results.study_id = study.study_id;
  results.total = total;
  for (const StudySession* s : ordered) {
    ParticipantScore score;
    score.participant_id = s->participant_id;
    score.session_id = s->session_id;
    for (int i = 0; i < total; ++i) {
      if (s->answers[i].label == study.questions[i].model_predicted) {
        ++score.accuracy;
      }
      if (s->answers[i].label == study.questions[i].gold) ++score.gold_accuracy;
    }
    results.participants.push_back(std::move(score));
  }
  const size_t m = results.participants.size();
  if (m > 0) {
    double sum = 0.0;
    for (const ParticipantScore& p : results.participants) sum += p.accuracy;
    results.mean_accuracy = sum / m;
    if (m > 1) {
      double ss = 0.0;
      for (const ParticipantScore& p : results.participants) {
        ss += (p.accuracy - results.mean_accuracy) *
              (p.accuracy - results.mean_accuracy);
      }
      results.sd_accuracy = std::sqrt(ss / (m - 1));
    }
  }
  double pair_sum = 0.0;
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = a + 1; b < m; ++b) {
      PairAgreement pair;
      pair.a = ordered[a]->session_id;
      pair.b = ordered[b]->session_id;
      for (int i = 0; i < total; ++i) {
        if (ordered[a]->answers[i].label == ordered[b]->answers[i].label) {
          ++pair.agreement;
        }
      }
      pair_sum += pair.agreement;
      results.pairs.push_back(std::move(pair));
    }
  }
  if (!results.pairs.empty()) {
    results.mutual_agreement = pair_sum / results.pairs.size();
  }
  for (int i = 0; i < total; ++i) {
    QuestionScore q;
    q.index = i;
    if (m > 0) {
      int model = 0;
      int gold = 0;
      for (const StudySession* s : ordered) {
        if (s->answers[i].label == study.questions[i].model_predicted) ++model;
        if (s->answers[i].label == study.questions[i].gold) ++gold;
      }
      q.model_match = static_cast<double>(model) / m;
      q.gold_match = static_cast<double>(gold) / m;
    }
    results.per_question.push_back(q);
  }
  return results;
}

nlohmann::ordered_json ResultsToJson(const StudyResults& results) {
  ordered_json j;
  j["study_id"] = results.study_id;
  j["total"] = results.total;
  j["mean_accuracy"] = results.mean_accuracy;
  j["sd_accuracy"] = results.sd_accuracy;
  j["mutual_agreement"] = results.mutual_agreement;
  ordered_json participants = ordered_json::array();
  for (const ParticipantScore& p : results.participants) {
    participants.push_back({{"participant_id", p.participant_id},
                            {"session_id", p.session_id},
                            {"accuracy", p.accuracy},
                            {"gold_accuracy", p.gold_accuracy}});
  }
  j["participants"] = std::move(participants);
  ordered_json pairs = ordered_json::array();
  for (const PairAgreement& p : results.pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"agreement", p.agreement}});
  }
  j["pairs"] = std::move(pairs);
  ordered_json per_question = ordered_json::array();
  for (const QuestionScore& q : results.per_question) {
    per_question.push_back({{"index", q.index},
                            {"model_match", q.model_match},
                            {"gold_match", q.gold_match}});
  }
  j["per_question"] = std::move(per_question);
  return j;
}

}  // namespace nlicheck
