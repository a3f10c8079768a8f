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

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances are fixed below.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "kbx.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

namespace {

using namespace kbx;
namespace fs = std::filesystem;

constexpr double kMatcherSeconds = 10.0;
constexpr double kPipelineSeconds = 60.0;
constexpr std::size_t kMatcherInstances = 200;
constexpr std::size_t kDocs = 1000;
constexpr std::size_t kSwitchCap = 10;
constexpr double kRatio = 0.15;
constexpr std::size_t kStage1Slack = 2;
constexpr std::size_t kStage1Balance = 3;
constexpr std::size_t kPairBudget = 3000;
constexpr std::size_t kPairTolerance = 1;
constexpr std::size_t kSentences = 1000;
constexpr std::size_t kDeskSentences = 10000;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t ceil_ratio(std::size_t n) { return (15 * n + 99) / 100; }

Verdict matcher_oracle() {
  Rng rng(20240601);
  std::size_t equal = 0;
  double matcher_time = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < kMatcherInstances; ++i) {
    const auto inst = synth::matcher_instance(rng);
    const auto t1 = std::chrono::steady_clock::now();
    const auto got = find_mentions(inst.text, inst.lang, inst.lexicon);
    const auto got_any = find_mentions_any(inst.text, inst.lexicon);
    matcher_time += seconds_since(t1);
    const auto text = to_u32(inst.text);
    equal += got == oracle::mentions(text, inst.lang, inst.lexicon) &&
             got_any == oracle::mentions(text, std::nullopt, inst.lexicon);
  }
  const double total = seconds_since(t0);
  std::ostringstream d;
  d << equal << "/" << kMatcherInstances << " instances equal the brute-force oracle; "
    << "total " << total << " s incl. oracle, matcher " << matcher_time << " s (limit "
    << kMatcherSeconds << " s)";
  return {equal == kMatcherInstances && total < kMatcherSeconds, d.str()};
}

Verdict code_switch_contract() {
  Rng rng(11);
  LexiconBuilder builder;
  std::vector<std::string> en, zh;
  std::set<std::string> used;
  for (int e = 0; e < 120; ++e) {
    const std::string id = "C" + std::to_string(100000 + e);
    const bool has_en = e < 100, has_zh = e < 80 || e >= 100;
    std::string s;
    if (has_en) {
      do s = synth::en_word(rng, 2, 4); while (!used.insert(s).second);
      builder.add(id, Lang::en, s);
      en.push_back(s);
    }
    if (has_zh) {
      do s = synth::zh_word(rng, 2, 4); while (!used.insert(s).second);
      builder.add(id, Lang::zh, s);
      zh.push_back(s);
    }
  }
  const auto lexicon = std::move(builder).build();
  std::size_t ok = 0;
  std::string first_failure;
  for (std::size_t d = 0; d < kDocs; ++d) {
    const Lang lang = d % 2 ? Lang::zh : Lang::en;
    std::string text = lang == Lang::en ? "Findings:" : "结果：";
    for (std::size_t k = rng.below(31); k > 0; --k) {
      text += lang == Lang::en ? " " + synth::pick(rng, en) + " with"
                               : synth::pick(rng, zh) + "，";
    }
    const auto mentions = find_mentions(text, lang, lexicon);
    std::size_t switchable = 0;
    for (const auto& m : mentions) {
      const auto* entity = lexicon.find(m.entity_id);
      switchable += !entity->en_surfaces.empty() && !entity->zh_surfaces.empty();
    }
    const uint64_t seed = derive_seed(99, "doc" + std::to_string(d), "switch");
    const auto doc = code_switch(text, lang, mentions, lexicon, seed);
    const bool count_ok = doc.replacements.size() == std::min(kSwitchCap, switchable);
    const bool restore_ok = restore_original(doc) == text;
    const bool same = code_switch(text, lang, mentions, lexicon, seed) == doc;
    if (count_ok && restore_ok && same) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = " first failure: doc " + std::to_string(d);
    }
  }
  return {ok == kDocs, std::to_string(ok) + "/" + std::to_string(kDocs) +
                           " docs: count = min(10, switchable), byte-exact restore, same-seed "
                           "identical" + first_failure};
}

Verdict laudanum_example() {
  const auto lexicon = parse_lexicon(
      "C0029148\ten\topium poppy\nC0029148\tzh\t罂粟花\n"
      "C0026549\ten\tmorphine\nC0026549\tzh\t吗啡\n");
  const auto relations = parse_relations("R_assoc\tassociated with\t有关联\n");
  const auto facts = parse_facts("C0029148\tR_assoc\tC0026549\n", lexicon, relations);
  const std::string base =
      "Laudanum contains approximately 10% opium poppy, the plant source of morphine.";
  const auto matches = match_facts(find_mentions(base, Lang::en, lexicon), facts);
  const auto doc = inject_facts(base, Lang::en, matches, lexicon, relations, 7);
  const std::string suffix = "[SEP] 罂粟花有关联吗啡";
  const bool ends = doc.full_text.size() >= suffix.size() &&
                    doc.full_text.compare(doc.full_text.size() - suffix.size(), suffix.size(),
                                          suffix) == 0;
  std::string relation;
  if (doc.appended_facts.size() == 1) {
    const auto span = doc.appended_facts[0].relation_span;
    relation = cp_slice(doc.full_text, span.start, span.end);
  }
  const auto masked = doc.appended_facts.empty() ? TrainingExample{} : mask_relation(doc);
  const bool masked_ok = masked.text.ends_with("[SEP] 罂粟花[MASK]吗啡") &&
                         masked.targets.size() == 1 && masked.targets[0].gold == "有关联";
  return {ends && relation == "有关联" && masked_ok,
          "full_text=\"" + doc.full_text + "\", relation span -> \"" + relation + "\"" +
              ", masked ends with 罂粟花[MASK]吗啡: " + (masked_ok ? "yes" : "no")};
}

Verdict masking_ratio() {
  Rng rng(404);
  const auto v = synth::vocabulary(rng);
  std::size_t ok = 0;
  for (std::size_t d = 0; d < kDocs; ++d) {
    const Lang lang = d % 2 ? Lang::zh : Lang::en;
    const std::string text = synth::mention_doc(rng, v, lang, 5 + rng.below(120));
    const auto doc = code_switch(text, lang, find_mentions(text, lang, v.lexicon), v.lexicon,
                                 derive_seed(1, std::to_string(d), "switch"));
    const auto ex =
        mask_entities(doc, doc.mentions, kRatio, derive_seed(1, std::to_string(d), "entity_mask"));
    const auto switched = to_u32(doc.switched_text);
    std::size_t total = 0;
    for (const auto& m : doc.mentions) {
      total += std::max<std::size_t>(1, oracle::count_tokens(switched.substr(m.start, m.end - m.start)));
    }
    std::size_t masked = 0, longest = 0;
    for (const auto& t : ex.targets) {
      const std::size_t n = std::max<std::size_t>(1, oracle::count_tokens(to_u32(t.gold)));
      masked += n;
      longest = std::max(longest, n);
    }
    const std::size_t need = ceil_ratio(total);
    const bool bound = masked >= need && (masked == 0 || masked < need + longest);
    ok += bound && unmask(ex) == doc.switched_text;
  }
  return {ok == kDocs, std::to_string(ok) + "/" + std::to_string(kDocs) +
                           " docs within [ceil(0.15 T), ceil(0.15 T) + longest) and "
                           "reconstruct byte-exactly"};
}

Verdict stage1_balance() {
  Rng rng(505);
  const auto v = synth::vocabulary(rng);
  std::size_t ok = 0, worst_gap = 0, worst_over = 0;
  for (std::size_t d = 0; d < kDocs; ++d) {
    const Lang lang = d % 2 ? Lang::zh : Lang::en;
    const std::string text = synth::mention_doc(rng, v, lang, 40 + rng.below(400));
    const auto mentions = find_mentions(text, lang, v.lexicon);
    const auto ex = stage1_mask(text, lang, mentions, derive_seed(2, std::to_string(d), "stage1"));
    const std::size_t budget = ceil_ratio(oracle::count_tokens(to_u32(text)));
    std::size_t entity = 0, word = 0;
    for (const auto& t : ex.targets) {
      (t.kind == MaskKind::entity ? entity : word) += oracle::count_tokens(to_u32(t.gold));
    }
    const std::size_t gap = entity > word ? entity - word : word - entity;
    const std::size_t total = entity + word;
    worst_gap = std::max(worst_gap, gap);
    if (total >= budget) worst_over = std::max(worst_over, total - budget);
    ok += gap <= kStage1Balance && total >= budget && total <= budget + kStage1Slack &&
          unmask(ex) == text;
  }
  return {ok == kDocs, std::to_string(ok) + "/" + std::to_string(kDocs) +
                           " docs; max |entity - word| = " + std::to_string(worst_gap) +
                           " (limit 3), max overshoot of B = " + std::to_string(worst_over) +
                           " (limit 2)"};
}

Verdict pair_corpus() {
  const auto registry = synth::registry(50, 50, 3000, 10, 16);
  const auto pairs = build_pairs(registry, kPairBudget, 8);
  std::map<PairLabel, std::size_t> counts;
  std::size_t valid = 0;
  std::set<std::tuple<std::string, std::size_t, std::string, std::size_t, PairLabel>> seen;
  for (const auto& p : pairs) {
    ++counts[p.label];
    bool ok = seen.emplace(p.seg_a.article_id, p.seg_a.index, p.seg_b.article_id, p.seg_b.index,
                           p.label).second;
    switch (p.label) {
      case PairLabel::positive:
        ok = ok && p.seg_a.lang != p.seg_b.lang &&
             registry.is_linked(p.seg_a.article_id, p.seg_b.article_id);
        break;
      case PairLabel::random:
        ok = ok && p.seg_a.lang != p.seg_b.lang &&
             !registry.is_linked(p.seg_a.article_id, p.seg_b.article_id);
        break;
      case PairLabel::context:
        ok = ok && p.seg_a.lang == p.seg_b.lang && p.seg_a.article_id == p.seg_b.article_id &&
             p.seg_a.index + 1 == p.seg_b.index;
        break;
    }
    valid += ok;
  }
  bool balanced = counts.size() == 3;
  for (const auto& [label, n] : counts) {
    balanced = balanced && n + kPairTolerance >= kPairBudget / 3 &&
               n <= kPairBudget / 3 + kPairTolerance;
  }
  const bool deterministic = build_pairs(registry, kPairBudget, 8) == pairs;
  std::ostringstream d;
  d << "positive " << counts[PairLabel::positive] << ", random " << counts[PairLabel::random]
    << ", context " << counts[PairLabel::context] << "; " << valid << "/" << pairs.size()
    << " satisfy label invariants; deterministic: " << (deterministic ? "yes" : "no");
  return {balanced && valid == pairs.size() && deterministic, d.str()};
}

// Simulated translation: gaps become Chinese filler, wrappers are emitted in
// the given ordinal order with optional padding inside.
std::string translate(const AnnotatedSentence& s, const std::vector<std::size_t>& ordinals,
                      Rng& rng) {
  const auto order = entity_order(s);
  std::string out = synth::zh_word(rng, 0, 3);
  for (std::size_t k : ordinals) {
    const auto& e = s.entities[order[k - 1]];
    const std::string pad = rng.below(4) == 0 ? " " : "";
    out += "<" + std::to_string(k) + ">" + pad + cp_slice(s.text, e.start, e.end) + pad + "</" +
           std::to_string(k) + ">" + synth::zh_word(rng, 0, 3);
  }
  return out;
}

Verdict marker_round_trip() {
  Rng rng(606);
  std::size_t recovered = 0, permuted = 0;
  std::vector<nlohmann::ordered_json> sources;
  std::vector<std::string> ids, damaged;
  std::map<std::string, std::size_t> expected_ordinal;
  for (std::size_t i = 0; i < kSentences; ++i) {
    const auto s = synth::annotated_sentence(rng, "s" + std::to_string(i));
    const auto marked = insert_markers(s);
    std::vector<std::size_t> ordinals(marked.entity_count);
    for (std::size_t k = 0; k < ordinals.size(); ++k) ordinals[k] = k + 1;
    const bool identity = i % 2 == 0;
    std::string translated = marked.text;
    if (!identity) {
      rng.shuffle(ordinals);
      translated = translate(s, ordinals, rng);
      ++permuted;
    }
    const auto target = project_labels(s, extract_markers(translated, marked.entity_count, s.id));
    bool ok = target.relations == s.relations && target.entities.size() == s.entities.size();
    for (std::size_t j = 0; ok && j < s.entities.size(); ++j) {
      ok = target.entities[j].label == s.entities[j].label &&
           cp_slice(target.text, target.entities[j].start, target.entities[j].end) ==
               cp_slice(s.text, s.entities[j].start, s.entities[j].end);
    }
    if (identity) ok = ok && target == s;
    recovered += ok;

    // Damage one marker of every tenth multi-entity sentence.
    sources.push_back(to_json(s));
    ids.push_back(s.id);
    if (i % 10 == 1 && marked.entity_count > 0) {
      const std::size_t k = 1 + rng.below(marked.entity_count);
      std::string text = translate(s, ordinals, rng);
      const std::string open = "<" + std::to_string(k) + ">";
      const std::string close = "</" + std::to_string(k) + ">";
      if (rng.below(2) == 0) {
        text.erase(text.find(open), open.size());
        text.erase(text.find(close), close.size());
      } else {
        text += open + "重复" + close;
      }
      damaged.push_back(text);
      expected_ordinal[s.id] = k;
    } else {
      damaged.push_back(marked.text);
    }
  }
  const auto batch = unmark_dataset(sources, ids, damaged);
  std::size_t routed = 0;
  for (const auto& q : batch.quarantine) {
    auto it = expected_ordinal.find(q.id);
    routed += it != expected_ordinal.end() && it->second == q.ordinal;
  }
  const bool quarantine_ok = routed == expected_ordinal.size() &&
                             batch.quarantine.size() == expected_ordinal.size() &&
                             batch.records.size() + batch.quarantine.size() == kSentences;
  std::ostringstream d;
  d << recovered << "/" << kSentences << " sentences recover all labels (" << permuted
    << " permuted translations); " << routed << "/" << expected_ordinal.size()
    << " damaged sentences quarantined with the damaged ordinal";
  return {recovered == kSentences && quarantine_ok, d.str()};
}

Verdict end_to_end() {
  synth::TempDir dir("acceptance");
  const std::size_t workers = 4;
  const auto corpus = synth::write_desk_corpus(
      dir.path(), {.entities = 3000, .facts = 20000, .sentences_per_lang = kDeskSentences / 2,
                   .linked = 50, .unlinked = 50, .min_paragraphs = 10, .max_paragraphs = 16,
                   .pair_budget = kPairBudget, .workers = workers, .seed = 2026});
  const auto config = load_config(corpus.config);
  std::vector<std::map<std::string, std::string>> runs;
  std::vector<double> times;
  for (int r = 0; r < 2; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run_pipeline(config);
    times.push_back(seconds_since(t0));
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(corpus.output_dir)) {
      files[entry.path().filename().string()] = read_file(entry.path(), "acceptance");
    }
    runs.push_back(std::move(files));
  }
  std::size_t jsonl = 0, records = 0;
  for (const auto& [name, contents] : runs[0]) {
    if (!name.ends_with(".jsonl")) continue;
    ++jsonl;
    records += static_cast<std::size_t>(std::count(contents.begin(), contents.end(), '\n'));
  }
  const bool identical = runs[0] == runs[1];
  std::ostringstream d;
  d << kDeskSentences << " sentences, " << workers << " workers: " << jsonl << " JSONL files, "
    << records << " records; byte-identical: " << (identical ? "yes" : "no") << "; runs "
    << times[0] << " s and " << times[1] << " s (limit " << kPipelineSeconds << " s)";
  return {identical && jsonl == 5 && times[0] < kPipelineSeconds && times[1] < kPipelineSeconds,
          d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"matcher oracle equivalence", matcher_oracle},
      {"code-switch contract", code_switch_contract},
      {"worked example reproduction", laudanum_example},
      {"entity masking ratio", masking_ratio},
      {"stage-1 balance", stage1_balance},
      {"pair corpus", pair_corpus},
      {"marker round trip", marker_round_trip},
      {"end-to-end determinism", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("[%s] AC%zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
