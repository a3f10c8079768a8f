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

// Fact matching over co-occurring mentions and cross-language fact injection.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kbx/entity_switcher.hpp"
#include "kbx/knowledge_store.hpp"
#include "kbx/random.hpp"
#include "kbx/tokens.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

struct FactMatch {
  FactTriple triple;
  Mention head_mention;
  Mention tail_mention;

  bool operator==(const FactMatch&) const = default;
};

// One match per stored triple whose two entities are both mentioned. A triple
// reachable through several mention pairs keeps the earliest pair. Result is
// ordered by (head start, tail start, relation id).
inline std::vector<FactMatch> match_facts(const std::vector<Mention>& mentions,
                                          const FactStore& facts) {
  std::map<FactTriple, FactMatch> earliest;
  auto key = [](const FactMatch& m) {
    return std::make_tuple(m.head_mention.start, m.tail_mention.start);
  };
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    for (std::size_t j = i + 1; j < mentions.size(); ++j) {
      const Mention& a = mentions[i];
      const Mention& b = mentions[j];
      if (a.entity_id == b.entity_id) continue;
      for (FactTriple& triple : facts.lookup(a.entity_id, b.entity_id)) {
        const bool a_is_head = triple.head_id == a.entity_id;
        FactMatch match{triple, a_is_head ? a : b, a_is_head ? b : a};
        auto it = earliest.find(triple);
        if (it == earliest.end()) {
          earliest.emplace(std::move(triple), std::move(match));
        } else if (key(match) < key(it->second)) {
          it->second = std::move(match);
        }
      }
    }
  }
  std::vector<FactMatch> out;
  out.reserve(earliest.size());
  for (auto& [triple, match] : earliest) out.push_back(std::move(match));
  std::sort(out.begin(), out.end(), [](const FactMatch& x, const FactMatch& y) {
    return std::tie(x.head_mention.start, x.tail_mention.start, x.triple.relation_id) <
           std::tie(y.head_mention.start, y.tail_mention.start, y.triple.relation_id);
  });
  return out;
}

struct AppendedFact {
  FactTriple triple;
  std::string surface;  // rendered fact
  Span relation_span;   // relation surface inside full_text
  Lang target_lang = Lang::zh;

  bool operator==(const AppendedFact&) const = default;
};

struct AugmentedDoc {
  std::string base_text;
  std::vector<AppendedFact> appended_facts;
  std::string full_text;
  Lang doc_lang = Lang::en;

  bool operator==(const AugmentedDoc&) const = default;
};

struct InjectOptions {
  std::size_t max_facts = 3;
  std::string separator = " [SEP] ";
  // Between consecutive appended facts.
  std::string fact_joiner = " ";
};

// A triple is renderable in a language when both of its entities have a
// surface there.
inline bool renderable(const FactTriple& triple, Lang lang,
                       const BilingualLexicon& lexicon) {
  const BilingualEntity* head = lexicon.find(triple.head_id);
  const BilingualEntity* tail = lexicon.find(triple.tail_id);
  return head && tail && !head->surfaces(lang).empty() &&
         !tail->surfaces(lang).empty();
}

// Appends up to max_facts matched facts, rendered in the language opposite to
// doc_lang, after the separator. zh facts are written head+relation+tail with
// no spaces; en facts are space separated.
inline AugmentedDoc inject_facts(std::string_view base_text, Lang doc_lang,
                                 const std::vector<FactMatch>& matches,
                                 const BilingualLexicon& lexicon,
                                 const RelationTable& relations, uint64_t seed,
                                 const InjectOptions& options = {}) {
  AugmentedDoc doc;
  doc.base_text = std::string(base_text);
  doc.full_text = doc.base_text;
  doc.doc_lang = doc_lang;
  const Lang target = other(doc_lang);

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (renderable(matches[i].triple, target, lexicon) &&
        relations.find(matches[i].triple.relation_id)) {
      usable.push_back(i);
    }
  }
  if (usable.empty() || options.max_facts == 0) return doc;

  Rng rng(seed);
  std::vector<uint64_t> picks =
      rng.sample(usable.size(), std::min(options.max_facts, usable.size()));
  std::sort(picks.begin(), picks.end());

  std::u32string full = to_u32(base_text);
  full += to_u32(options.separator);
  const std::u32string joiner = to_u32(options.fact_joiner);
  const std::u32string space = U" ";
  for (std::size_t n = 0; n < picks.size(); ++n) {
    const FactTriple& triple = matches[usable[picks[n]]].triple;
    if (n > 0) full += joiner;
    const std::size_t fact_start = full.size();
    full += to_u32(lexicon.find(triple.head_id)->surfaces(target).front());
    if (target == Lang::en) full += space;
    const std::size_t rel_start = full.size();
    full += to_u32(relations.find(triple.relation_id)->surface(target));
    const std::size_t rel_end = full.size();
    if (target == Lang::en) full += space;
    full += to_u32(lexicon.find(triple.tail_id)->surfaces(target).front());
    doc.appended_facts.push_back(
        {triple,
         to_utf8(std::u32string_view(full).substr(fact_start)),
         {rel_start, rel_end},
         target});
  }
  doc.full_text = to_utf8(full);
  return doc;
}

}  // namespace kbx
