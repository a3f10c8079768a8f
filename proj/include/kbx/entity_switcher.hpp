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

// Dictionary entity matching and entity-level code-switching.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kbx/knowledge_store.hpp"
#include "kbx/lang.hpp"
#include "kbx/random.hpp"
#include "kbx/tokens.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

struct Mention {
  std::size_t start = 0;  // code point offset, inclusive
  std::size_t end = 0;    // exclusive
  std::string entity_id;
  Lang surface_lang = Lang::en;

  Span span() const { return {start, end}; }
  bool operator==(const Mention&) const = default;
};

namespace detail {

struct Candidate {
  std::size_t length = 0;
  const std::string* entity_id = nullptr;
  Lang lang = Lang::en;
};

inline bool at_word_boundary(std::u32string_view text, std::size_t start,
                             std::size_t end) {
  return (start == 0 || !is_word_char(text[start - 1])) &&
         (end == text.size() || !is_word_char(text[end]));
}

// Longest candidate per start offset for one language.
inline void collect_candidates(std::u32string_view text, Lang lang,
                               const BilingualLexicon& lexicon,
                               std::vector<Candidate>& best) {
  const SurfaceIndex& index = lexicon.index(lang);
  if (index.automaton.pattern_count() == 0) return;
  std::u32string folded;
  std::u32string_view haystack = text;
  if (lang == Lang::en) {
    folded = fold(text);
    haystack = folded;
  }
  index.automaton.for_each_match(
      haystack, [&](int32_t pattern, std::size_t start, std::size_t end) {
        if (lang == Lang::en && !at_word_boundary(text, start, end)) return;
        Candidate& slot = best[start];
        if (end - start > slot.length) {
          slot = {end - start, &index.entity_of_pattern[pattern], lang};
        }
      });
}

inline std::vector<Mention> select_leftmost_longest(
    const std::vector<Candidate>& best) {
  std::vector<Mention> out;
  std::size_t i = 0;
  while (i < best.size()) {
    if (best[i].length == 0) {
      ++i;
      continue;
    }
    out.push_back({i, i + best[i].length, *best[i].entity_id, best[i].lang});
    i += best[i].length;
  }
  return out;
}

}  // namespace detail

// Greedy leftmost-longest, non-overlapping dictionary matches of surfaces in
// doc_lang. English matches are case-insensitive and must sit on word
// boundaries; Chinese matches are exact substrings.
inline std::vector<Mention> find_mentions(std::u32string_view text, Lang doc_lang,
                                          const BilingualLexicon& lexicon) {
  std::vector<detail::Candidate> best(text.size());
  detail::collect_candidates(text, doc_lang, lexicon, best);
  return detail::select_leftmost_longest(best);
}

inline std::vector<Mention> find_mentions(std::string_view text, Lang doc_lang,
                                          const BilingualLexicon& lexicon) {
  return find_mentions(std::u32string_view(to_u32(text)), doc_lang, lexicon);
}

// Same policy over surfaces of both languages, for mixed-language text such
// as code-switched output.
inline std::vector<Mention> find_mentions_any(std::u32string_view text,
                                              const BilingualLexicon& lexicon) {
  std::vector<detail::Candidate> best(text.size());
  detail::collect_candidates(text, Lang::en, lexicon, best);
  detail::collect_candidates(text, Lang::zh, lexicon, best);
  return detail::select_leftmost_longest(best);
}

inline std::vector<Mention> find_mentions_any(std::string_view text,
                                              const BilingualLexicon& lexicon) {
  return find_mentions_any(std::u32string_view(to_u32(text)), lexicon);
}

struct Replacement {
  Mention original;          // span in original_text
  std::string original_surface;
  std::string substituted;   // counterpart surface written into switched_text
  Lang target_lang = Lang::zh;
  Span switched_span;        // span of substituted in switched_text

  bool operator==(const Replacement&) const = default;
};

struct SwitchedDoc {
  std::string original_text;
  std::string switched_text;
  std::vector<Replacement> replacements;
  Lang doc_lang = Lang::en;
  // Every input mention relocated into switched_text; replaced ones carry
  // the target language.
  std::vector<Mention> mentions;

  bool operator==(const SwitchedDoc&) const = default;
};

struct SwitchOptions {
  std::size_t cap = 10;
  // Pick a random counterpart synonym instead of the first-listed one.
  bool random_synonym = false;
};

inline bool is_switchable(const Mention& mention, const BilingualLexicon& lexicon) {
  const BilingualEntity* entity = lexicon.find(mention.entity_id);
  return entity && entity->switchable() &&
         !entity->surfaces(other(mention.surface_lang)).empty();
}

// Replaces min(cap, #switchable) mentions, chosen uniformly without
// replacement, by a counterpart surface in the other language.
inline SwitchedDoc code_switch(std::string_view text, Lang doc_lang,
                               const std::vector<Mention>& mentions,
                               const BilingualLexicon& lexicon, uint64_t seed,
                               const SwitchOptions& options = {}) {
  SwitchedDoc doc;
  doc.original_text = std::string(text);
  doc.doc_lang = doc_lang;

  std::vector<std::size_t> switchable;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    if (is_switchable(mentions[i], lexicon)) switchable.push_back(i);
  }
  Rng rng(seed);
  std::vector<bool> chosen(mentions.size(), false);
  for (uint64_t k : rng.sample(switchable.size(),
                               std::min(options.cap, switchable.size()))) {
    chosen[switchable[k]] = true;
  }

  const std::u32string source = to_u32(text);
  std::u32string out;
  out.reserve(source.size() + 16);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const Mention& m = mentions[i];
    out.append(source, cursor, m.start - cursor);
    cursor = m.end;
    std::u32string_view original(source.data() + m.start, m.end - m.start);
    if (!chosen[i]) {
      const std::size_t at = out.size();
      out.append(original);
      doc.mentions.push_back({at, out.size(), m.entity_id, m.surface_lang});
      continue;
    }
    const Lang target = other(m.surface_lang);
    const auto& counterparts = lexicon.find(m.entity_id)->surfaces(target);
    const std::string& surface =
        options.random_synonym ? counterparts[rng.below(counterparts.size())]
                               : counterparts.front();
    const std::size_t at = out.size();
    out += to_u32(surface);
    const Span switched{at, out.size()};
    doc.mentions.push_back({at, out.size(), m.entity_id, target});
    doc.replacements.push_back({m, to_utf8(original), surface, target, switched});
  }
  out.append(source, cursor);
  doc.switched_text = to_utf8(out);
  return doc;
}

// Undoes the recorded substitutions.
inline std::string restore_original(const SwitchedDoc& doc) {
  std::u32string text = to_u32(doc.switched_text);
  for (auto it = doc.replacements.rbegin(); it != doc.replacements.rend(); ++it) {
    text.replace(it->switched_span.start, it->switched_span.size(),
                 to_u32(it->original_surface));
  }
  return to_utf8(text);
}

// Corpus-level direction counts of replacements.
struct SwitchBalance {
  std::size_t en_to_zh = 0;
  std::size_t zh_to_en = 0;

  void add(const SwitchedDoc& doc) {
    for (const Replacement& r : doc.replacements) {
      (r.target_lang == Lang::zh ? en_to_zh : zh_to_en) += 1;
    }
  }
  void add(const SwitchBalance& o) {
    en_to_zh += o.en_to_zh;
    zh_to_en += o.zh_to_en;
  }
  // |a - b| / max(a, b); 0 when both are zero.
  double relative_gap() const {
    const auto hi = std::max(en_to_zh, zh_to_en);
    const auto lo = std::min(en_to_zh, zh_to_en);
    return hi == 0 ? 0.0 : static_cast<double>(hi - lo) / static_cast<double>(hi);
  }
};

}  // namespace kbx
