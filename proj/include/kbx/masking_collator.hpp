// Copyright 2026 The kbx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Collation of augmented documents and passage pairs into frozen, masked
// training records, plus the monolingual/bilingual stream mixer.

#include "json.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <ranges>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbx/entity_switcher.hpp"
#include "kbx/error.hpp"
#include "kbx/fact_injector.hpp"
#include "kbx/passage_pairer.hpp"
#include "kbx/random.hpp"
#include "kbx/tokens.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

inline constexpr std::string_view kMaskingCollator = "masking_collator";
inline constexpr std::string_view kMaskToken = "[MASK]";

enum class Task { entity_mlm, fact_mlm, passage_rel, stage1_mlm };
enum class MaskKind { entity, relation, word };

inline std::string_view to_string(Task task) {
  switch (task) {
    case Task::entity_mlm: return "entity_mlm";
    case Task::fact_mlm: return "fact_mlm";
    case Task::passage_rel: return "passage_rel";
    case Task::stage1_mlm: return "stage1_mlm";
  }
  return "";
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "entity_mlm") return Task::entity_mlm;
  if (s == "fact_mlm") return Task::fact_mlm;
  if (s == "passage_rel") return Task::passage_rel;
  if (s == "stage1_mlm") return Task::stage1_mlm;
  return std::nullopt;
}

inline std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::entity: return "entity";
    case MaskKind::relation: return "relation";
    case MaskKind::word: return "word";
  }
  return "";
}

inline std::optional<MaskKind> parse_mask_kind(std::string_view s) {
  if (s == "entity") return MaskKind::entity;
  if (s == "relation") return MaskKind::relation;
  if (s == "word") return MaskKind::word;
  return std::nullopt;
}

// Span refers to the text before masking.
struct MaskTarget {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string gold;
  MaskKind kind = MaskKind::entity;

  bool operator==(const MaskTarget&) const = default;
};

struct TrainingExample {
  Task task = Task::entity_mlm;
  std::string doc_id;
  std::string text;    // masked text, or text_a of a passage pair
  std::string text_b;  // passage pairs only
  std::vector<MaskTarget> targets;
  std::optional<PairLabel> pair_label;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool operator==(const TrainingExample&) const = default;
};

// Replaces each span with the mask placeholder. Spans must be sorted and
// disjoint; golds are filled from text.
inline std::string apply_masks(std::u32string_view text, std::vector<MaskTarget>& targets) {
  std::sort(targets.begin(), targets.end(),
            [](const MaskTarget& a, const MaskTarget& b) { return a.start < b.start; });
  const std::u32string mask = to_u32(kMaskToken);
  std::u32string out;
  std::size_t cursor = 0;
  for (MaskTarget& t : targets) {
    if (t.start < cursor || t.end <= t.start || t.end > text.size()) {
      throw Error(std::string(kMaskingCollator), "invalid or overlapping mask span");
    }
    t.gold = to_utf8(text.substr(t.start, t.end - t.start));
    out.append(text.substr(cursor, t.start - cursor));
    out += mask;
    cursor = t.end;
  }
  out.append(text.substr(cursor));
  return to_utf8(out);
}

// Substitutes golds for placeholders, in order.
inline std::string unmask(std::string_view masked, const std::vector<MaskTarget>& targets) {
  std::string out;
  std::size_t cursor = 0;
  for (const MaskTarget& t : targets) {
    std::size_t at = masked.find(kMaskToken, cursor);
    if (at == std::string_view::npos) {
      throw Error(std::string(kMaskingCollator), "fewer placeholders than targets");
    }
    out.append(masked.substr(cursor, at - cursor));
    out += t.gold;
    cursor = at + kMaskToken.size();
  }
  if (masked.find(kMaskToken, cursor) != std::string_view::npos) {
    throw Error(std::string(kMaskingCollator), "more placeholders than targets");
  }
  out.append(masked.substr(cursor));
  return out;
}

inline std::string unmask(const TrainingExample& example) {
  return unmask(example.text, example.targets);
}

// Tokens of a mention, at least one.
inline std::size_t mention_tokens(std::u32string_view text, const Mention& m) {
  return std::max<std::size_t>(1, count_word_tokens(text.substr(m.start, m.end - m.start)));
}

// Masks whole mentions, picked in seeded random order, until the masked
// token count reaches ceil(ratio * entity tokens).
inline TrainingExample mask_entities(const SwitchedDoc& doc,
                                     const std::vector<Mention>& mentions_after_switch,
                                     double ratio, uint64_t seed,
                                     std::string doc_id = {}) {
  const std::u32string text = to_u32(doc.switched_text);
  std::vector<std::size_t> tokens(mentions_after_switch.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < mentions_after_switch.size(); ++i) {
    tokens[i] = mention_tokens(text, mentions_after_switch[i]);
    total += tokens[i];
  }
  const std::size_t need = ceil_fraction(ratio, total);

  std::vector<std::size_t> order(mentions_after_switch.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<MaskTarget> targets;
  std::size_t masked = 0;
  for (std::size_t i : order) {
    if (masked >= need) break;
    const Mention& m = mentions_after_switch[i];
    targets.push_back({m.start, m.end, {}, MaskKind::entity});
    masked += tokens[i];
  }

  TrainingExample example;
  example.task = Task::entity_mlm;
  example.doc_id = std::move(doc_id);
  example.text = apply_masks(text, targets);
  example.targets = std::move(targets);
  example.meta["lang"] = to_string(doc.doc_lang);
  example.meta["switched"] = doc.replacements.size();
  return example;
}

// Masks the relation of every appended fact.
inline TrainingExample mask_relation(const AugmentedDoc& doc, std::string doc_id = {}) {
  if (doc.appended_facts.empty()) {
    throw Error(std::string(kMaskingCollator),
                "mask_relation called on a document without appended facts");
  }
  std::vector<MaskTarget> targets;
  for (const AppendedFact& fact : doc.appended_facts) {
    targets.push_back({fact.relation_span.start, fact.relation_span.end, {}, MaskKind::relation});
  }
  TrainingExample example;
  example.task = Task::fact_mlm;
  example.doc_id = std::move(doc_id);
  example.text = apply_masks(to_u32(doc.full_text), targets);
  example.targets = std::move(targets);
  example.meta["lang"] = to_string(doc.doc_lang);
  example.meta["fact_lang"] = to_string(doc.appended_facts.front().target_lang);
  return example;
}

inline TrainingExample make_pair_example(const PassagePairExample& pair,
                                         std::string doc_id = {}) {
  TrainingExample example;
  example.task = Task::passage_rel;
  example.doc_id = std::move(doc_id);
  example.text = pair.seg_a.text;
  example.text_b = pair.seg_b.text;
  example.pair_label = pair.label;
  example.meta["lang_a"] = to_string(pair.seg_a.lang);
  example.meta["lang_b"] = to_string(pair.seg_b.lang);
  example.meta["article_a"] = pair.seg_a.article_id;
  example.meta["article_b"] = pair.seg_b.article_id;
  example.meta["index_a"] = pair.seg_a.index;
  example.meta["index_b"] = pair.seg_b.index;
  return example;
}

struct Stage1Options {
  double ratio = 0.15;
  // Longer mentions are not entity-mask candidates.
  std::size_t max_entity_tokens = 3;
};

// Stage-1 masking: a budget of ceil(ratio * N) tokens split 1:1 between whole
// short mentions (the ceiling half) and single non-mention word tokens (the
// floor half). Entity shortfall moves to words.
inline TrainingExample stage1_mask(std::string_view doc_text, Lang lang,
                                   const std::vector<Mention>& mentions, uint64_t seed,
                                   const Stage1Options& options = {},
                                   std::string doc_id = {}) {
  const std::u32string text = to_u32(doc_text);
  const std::vector<Span> tokens = word_tokens(text);
  const std::size_t budget = ceil_fraction(options.ratio, tokens.size());
  const std::size_t entity_quota = (budget + 1) / 2;

  std::vector<std::size_t> eligible;
  std::vector<std::size_t> mention_size(mentions.size());
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const Mention& m = mentions[i];
    mention_size[i] = count_word_tokens(std::u32string_view(text).substr(m.start, m.end - m.start));
    if (mention_size[i] >= 1 && mention_size[i] <= options.max_entity_tokens) {
      eligible.push_back(i);
    }
  }

  Rng rng(seed);
  rng.shuffle(eligible);
  std::vector<MaskTarget> targets;
  std::size_t entity_masked = 0;
  for (std::size_t i : eligible) {
    if (entity_masked >= entity_quota) break;
    targets.push_back({mentions[i].start, mentions[i].end, {}, MaskKind::entity});
    entity_masked += mention_size[i];
  }

  const std::size_t word_quota = budget - std::min(entity_masked, entity_quota);
  std::vector<std::size_t> free_words;
  {
    std::size_t m = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      while (m < mentions.size() && mentions[m].end <= tokens[t].start) ++m;
      const bool covered = m < mentions.size() && tokens[t].overlaps(mentions[m].span());
      if (!covered) free_words.push_back(t);
    }
  }
  for (uint64_t k : rng.sample(free_words.size(), std::min(word_quota, free_words.size()))) {
    const Span& s = tokens[free_words[k]];
    targets.push_back({s.start, s.end, {}, MaskKind::word});
  }

  TrainingExample example;
  example.task = Task::stage1_mlm;
  example.doc_id = std::move(doc_id);
  example.text = apply_masks(text, targets);
  example.targets = std::move(targets);
  example.meta["lang"] = to_string(lang);
  if (eligible.empty()) example.meta["entity_fallback"] = true;
  return example;
}

enum class StreamSource { mono, bilingual };

struct MixCounts {
  std::size_t mono = 0;
  std::size_t bilingual = 0;
};

// Strict alternation between the two streams, starting with a seeded coin
// flip and stopping as soon as the stream whose turn it is runs dry, so the
// per-source counts differ by at most one. sink(value, StreamSource).
template <std::ranges::input_range Mono, std::ranges::input_range Bilingual, typename Sink>
MixCounts mix_streams(Mono&& mono, Bilingual&& bilingual, uint64_t seed, Sink&& sink) {
  auto m = std::ranges::begin(mono);
  auto b = std::ranges::begin(bilingual);
  if (m == std::ranges::end(mono) || b == std::ranges::end(bilingual)) {
    throw Error(std::string(kMaskingCollator), "mix_streams needs two non-empty streams");
  }
  MixCounts counts;
  Rng rng(seed);
  bool mono_turn = rng.coin();
  while (true) {
    if (mono_turn) {
      if (m == std::ranges::end(mono)) break;
      sink(*m, StreamSource::mono);
      ++m;
      ++counts.mono;
    } else {
      if (b == std::ranges::end(bilingual)) break;
      sink(*b, StreamSource::bilingual);
      ++b;
      ++counts.bilingual;
    }
    mono_turn = !mono_turn;
  }
  return counts;
}

template <typename T>
std::vector<T> mix_streams(const std::vector<T>& mono, const std::vector<T>& bilingual,
                           uint64_t seed) {
  std::vector<T> out;
  out.reserve(2 * std::min(mono.size(), bilingual.size()) + 1);
  mix_streams(mono, bilingual, seed, [&](const T& v, StreamSource) { out.push_back(v); });
  return out;
}

// JSONL record contract. Field order is fixed:
//   task, doc_id, text | (text_a, text_b), targets, pair_label, meta
inline nlohmann::ordered_json to_json(const TrainingExample& example) {
  nlohmann::ordered_json j;
  j["task"] = to_string(example.task);
  j["doc_id"] = example.doc_id;
  if (example.task == Task::passage_rel) {
    j["text_a"] = example.text;
    j["text_b"] = example.text_b;
  } else {
    j["text"] = example.text;
  }
  j["targets"] = nlohmann::ordered_json::array();
  for (const MaskTarget& t : example.targets) {
    nlohmann::ordered_json target;
    target["start"] = t.start;
    target["end"] = t.end;
    target["gold"] = t.gold;
    target["kind"] = to_string(t.kind);
    j["targets"].push_back(std::move(target));
  }
  j["pair_label"] = example.pair_label
                        ? nlohmann::ordered_json(to_string(*example.pair_label))
                        : nlohmann::ordered_json(nullptr);
  j["meta"] = example.meta;
  return j;
}

inline std::string to_jsonl_line(const TrainingExample& example) {
  return to_json(example).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline TrainingExample from_json(const nlohmann::ordered_json& j) {
  auto fail = [](const std::string& message) -> void {
    throw Error(std::string(kMaskingCollator), "bad record: " + message);
  };
  try {
    TrainingExample example;
    auto task = parse_task(j.at("task").get<std::string>());
    if (!task) fail("unknown task");
    example.task = *task;
    example.doc_id = j.at("doc_id").get<std::string>();
    if (example.task == Task::passage_rel) {
      example.text = j.at("text_a").get<std::string>();
      example.text_b = j.at("text_b").get<std::string>();
    } else {
      example.text = j.at("text").get<std::string>();
    }
    for (const auto& t : j.at("targets")) {
      auto kind = parse_mask_kind(t.at("kind").get<std::string>());
      if (!kind) fail("unknown mask kind");
      example.targets.push_back({t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>(),
                                 t.at("gold").get<std::string>(), *kind});
    }
    const auto& label = j.at("pair_label");
    if (!label.is_null()) {
      auto parsed = parse_pair_label(label.get<std::string>());
      if (!parsed) fail("unknown pair label");
      example.pair_label = parsed;
    }
    if ((example.task == Task::passage_rel) != example.pair_label.has_value()) {
      fail("pair_label must be present exactly for passage_rel");
    }
    if (example.task == Task::passage_rel && !example.targets.empty()) {
      fail("passage_rel records carry no targets");
    }
    example.meta = j.at("meta");
    return example;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(kMaskingCollator), std::string("bad record: ") + e.what());
  }
}

inline TrainingExample parse_jsonl_line(std::string_view line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(kMaskingCollator), std::string("bad JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace kbx
