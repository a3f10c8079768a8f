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

// Segmenting articles and sampling labeled passage pairs:
//   positive  cross-language segments from pair-linked articles
//   random    cross-language segments from articles that are not linked
//   context   adjacent segments of one article

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kbx/error.hpp"
#include "kbx/knowledge_store.hpp"
#include "kbx/random.hpp"
#include "kbx/tokens.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

inline constexpr std::string_view kPassagePairer = "passage_pairer";

enum class PairLabel { positive, random, context };

inline std::string_view to_string(PairLabel label) {
  switch (label) {
    case PairLabel::positive: return "positive";
    case PairLabel::random: return "random";
    case PairLabel::context: return "context";
  }
  return "";
}

inline std::optional<PairLabel> parse_pair_label(std::string_view s) {
  if (s == "positive") return PairLabel::positive;
  if (s == "random") return PairLabel::random;
  if (s == "context") return PairLabel::context;
  return std::nullopt;
}

struct Segment {
  std::string article_id;
  Lang lang = Lang::en;
  std::size_t index = 0;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Segment&) const = default;
};

struct PassagePairExample {
  Segment seg_a;
  Segment seg_b;
  PairLabel label = PairLabel::positive;

  bool operator==(const PassagePairExample&) const = default;
};

// Packs paragraphs greedily into segments of at most max_segment_tokens layout
// tokens. A paragraph longer than the cap is cut at the cap; its tail starts
// a new segment that later paragraphs may join. Paragraphs inside a segment
// are separated by a newline.
inline std::vector<Segment> segment_article(const Article& article,
                                            std::size_t max_segment_tokens = 256) {
  if (max_segment_tokens == 0) {
    throw ValidationError(std::string(kPassagePairer), "max_segment_tokens must be positive");
  }
  std::vector<Segment> segments;
  std::string current;
  std::size_t current_tokens = 0;
  auto flush = [&] {
    if (current_tokens == 0) return;
    segments.push_back({article.id, article.lang, segments.size(), std::move(current),
                        current_tokens});
    current.clear();
    current_tokens = 0;
  };
  auto append = [&](std::string piece, std::size_t tokens) {
    if (current_tokens > 0) current.push_back('\n');
    current += piece;
    current_tokens += tokens;
  };

  for (const std::string& paragraph : article.paragraphs) {
    const std::u32string text = to_u32(paragraph);
    const std::vector<Span> tokens = layout_tokens(text);
    if (tokens.empty()) continue;
    if (tokens.size() <= max_segment_tokens) {
      if (current_tokens + tokens.size() > max_segment_tokens) flush();
      append(paragraph, tokens.size());
      continue;
    }
    flush();
    for (std::size_t first = 0; first < tokens.size(); first += max_segment_tokens) {
      const std::size_t last = std::min(first + max_segment_tokens, tokens.size()) - 1;
      std::string piece = to_utf8(std::u32string_view(text).substr(
          tokens[first].start, tokens[last].end - tokens[first].start));
      flush();
      append(std::move(piece), last - first + 1);
    }
  }
  flush();
  return segments;
}

namespace detail {

// Segments of every article of one language, stored contiguously with the
// range owned by each article.
struct SegmentTable {
  std::vector<Segment> segments;
  std::vector<std::string> article_ids;
  std::vector<std::size_t> begin;  // article_ids.size() + 1 offsets

  std::size_t count(std::size_t article) const { return begin[article + 1] - begin[article]; }

  std::optional<std::size_t> article_index(std::string_view id) const {
    auto it = std::lower_bound(article_ids.begin(), article_ids.end(), id);
    if (it == article_ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - article_ids.begin());
  }
};

inline SegmentTable segment_language(const PassageRegistry& registry, Lang lang,
                                     std::size_t max_segment_tokens) {
  SegmentTable table;
  table.begin.push_back(0);
  for (const auto& [id, article] : registry.articles(lang)) {
    for (Segment& s : segment_article(article, max_segment_tokens)) {
      table.segments.push_back(std::move(s));
    }
    table.article_ids.push_back(id);
    table.begin.push_back(table.segments.size());
  }
  return table;
}

// Maps a flat candidate index to a group through prefix sums.
inline std::size_t locate(const std::vector<uint64_t>& prefix, uint64_t k) {
  auto it = std::upper_bound(prefix.begin(), prefix.end(), k);
  return static_cast<std::size_t>(it - prefix.begin()) - 1;
}

}  // namespace detail

// Candidate counts per label for a registry.
struct PairCandidates {
  uint64_t positive = 0;
  uint64_t random = 0;
  uint64_t context = 0;
};

// Samples floor(budget/3) pairs per label (the remainder goes to positive,
// then random) without replacement. Candidates are addressed by index, never
// materialized. A label whose candidate pool is smaller than its quota
// contributes its whole pool.
class PairSampler {
 public:
  PairSampler(const PassageRegistry& registry, std::size_t max_segment_tokens = 256)
      : en_(detail::segment_language(registry, Lang::en, max_segment_tokens)),
        zh_(detail::segment_language(registry, Lang::zh, max_segment_tokens)) {
    // positive: linked article pairs
    positive_prefix_.push_back(0);
    for (const auto& [en_id, zh_id] : registry.pair_links()) {
      std::size_t a = *en_.article_index(en_id);
      std::size_t b = *zh_.article_index(zh_id);
      links_.push_back({a, b});
      positive_prefix_.push_back(positive_prefix_.back() + en_.count(a) * zh_.count(b));
    }
    // random: every en article against all zh segments except its partner's
    partner_.assign(en_.article_ids.size(), std::nullopt);
    for (const auto& [a, b] : links_) partner_[a] = b;
    random_prefix_.push_back(0);
    const uint64_t zh_total = zh_.segments.size();
    for (std::size_t a = 0; a < en_.article_ids.size(); ++a) {
      uint64_t excluded = partner_[a] ? zh_.count(*partner_[a]) : 0;
      random_prefix_.push_back(random_prefix_.back() + en_.count(a) * (zh_total - excluded));
    }
    // context: adjacent segments, en articles then zh articles
    context_prefix_.push_back(0);
    for (Lang lang : {Lang::en, Lang::zh}) {
      const detail::SegmentTable& t = table(lang);
      for (std::size_t a = 0; a < t.article_ids.size(); ++a) {
        const std::size_t n = t.count(a);
        context_groups_.push_back({lang, a});
        context_prefix_.push_back(context_prefix_.back() + (n > 0 ? n - 1 : 0));
      }
    }
  }

  PairCandidates candidates() const {
    return {positive_prefix_.back(), random_prefix_.back(), context_prefix_.back()};
  }

  PassagePairExample positive(uint64_t k) const {
    const std::size_t g = detail::locate(positive_prefix_, k);
    const auto [a, b] = links_[g];
    const uint64_t local = k - positive_prefix_[g];
    const uint64_t nz = zh_.count(b);
    return {en_.segments[en_.begin[a] + local / nz], zh_.segments[zh_.begin[b] + local % nz],
            PairLabel::positive};
  }

  PassagePairExample random(uint64_t k) const {
    const std::size_t a = detail::locate(random_prefix_, k);
    const uint64_t local = k - random_prefix_[a];
    uint64_t lo = 0;
    uint64_t hi = 0;
    if (partner_[a]) {
      lo = zh_.begin[*partner_[a]];
      hi = zh_.begin[*partner_[a] + 1];
    }
    const uint64_t width = zh_.segments.size() - (hi - lo);
    const uint64_t i = local / width;
    uint64_t j = local % width;
    if (j >= lo) j += hi - lo;
    return {en_.segments[en_.begin[a] + i], zh_.segments[j], PairLabel::random};
  }

  PassagePairExample context(uint64_t k) const {
    const std::size_t g = detail::locate(context_prefix_, k);
    const auto& [lang, a] = context_groups_[g];
    const detail::SegmentTable& t = table(lang);
    const std::size_t first = t.begin[a] + (k - context_prefix_[g]);
    return {t.segments[first], t.segments[first + 1], PairLabel::context};
  }

  std::vector<PassagePairExample> sample(std::size_t budget, uint64_t seed) const {
    if (budget < 3) {
      throw ValidationError(std::string(kPassagePairer), "pair budget must be at least 3");
    }
    const PairCandidates pool = candidates();
    const std::size_t quota = budget / 3;
    const std::size_t extra = budget % 3;
    struct Plan {
      PairLabel label;
      uint64_t pool;
      std::size_t quota;
    };
    const Plan plans[] = {{PairLabel::positive, pool.positive, quota + (extra > 0)},
                          {PairLabel::random, pool.random, quota + (extra > 1)},
                          {PairLabel::context, pool.context, quota}};
    for (const Plan& plan : plans) {
      if (plan.pool == 0) {
        throw Error(std::string(kPassagePairer),
                    "no " + std::string(to_string(plan.label)) +
                        " pair candidates; registry too small");
      }
    }
    std::vector<PassagePairExample> out;
    out.reserve(budget);
    for (const Plan& plan : plans) {
      Rng rng(derive_seed(seed, to_string(plan.label), "pairs"));
      for (uint64_t k : rng.sample(plan.pool, plan.quota)) {
        switch (plan.label) {
          case PairLabel::positive: out.push_back(positive(k)); break;
          case PairLabel::random: out.push_back(random(k)); break;
          case PairLabel::context: out.push_back(context(k)); break;
        }
      }
    }
    return out;
  }

  const std::vector<Segment>& segments(Lang lang) const { return table(lang).segments; }

 private:
  const detail::SegmentTable& table(Lang lang) const { return lang == Lang::en ? en_ : zh_; }

  detail::SegmentTable en_;
  detail::SegmentTable zh_;
  std::vector<std::pair<std::size_t, std::size_t>> links_;
  std::vector<std::optional<std::size_t>> partner_;
  std::vector<std::pair<Lang, std::size_t>> context_groups_;
  std::vector<uint64_t> positive_prefix_;
  std::vector<uint64_t> random_prefix_;
  std::vector<uint64_t> context_prefix_;
};

inline std::vector<PassagePairExample> build_pairs(const PassageRegistry& registry,
                                                   std::size_t budget, uint64_t seed,
                                                   std::size_t max_segment_tokens = 256) {
  return PairSampler(registry, max_segment_tokens).sample(budget, seed);
}

}  // namespace kbx
