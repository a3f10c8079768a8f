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

// Numbered-marker round trip for carrying entity and relation annotations
// through an external translation step. Entity k (1-based, by start offset)
// is wrapped as <k>surface</k>; after translation the wrappers are parsed
// back and labels are attached by ordinal, not by position.

#include "json.hpp"

#include <algorithm>
#include <map>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kbx/error.hpp"
#include "kbx/tokens.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

inline constexpr std::string_view kDatasetMarker = "dataset_marker";

struct EntityAnnotation {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  bool operator==(const EntityAnnotation&) const = default;
};

// head and tail are 0-based indices into AnnotatedSentence::entities.
struct RelationAnnotation {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string label;

  bool operator==(const RelationAnnotation&) const = default;
};

struct AnnotatedSentence {
  std::string id;
  std::string text;
  std::vector<EntityAnnotation> entities;
  std::vector<RelationAnnotation> relations;

  bool operator==(const AnnotatedSentence&) const = default;
};

struct MarkedSentence {
  std::string text;
  std::size_t entity_count = 0;
};

// Marker defect in one sentence. ordinal is 0 when the defect is not tied to
// a specific marker.
class MarkerError : public Error {
 public:
  MarkerError(std::string sentence_id, std::size_t ordinal, const std::string& message)
      : Error(std::string(kDatasetMarker),
              (sentence_id.empty() ? std::string() : "sentence " + sentence_id + ": ") +
                  message),
        sentence_id_(std::move(sentence_id)),
        ordinal_(ordinal),
        reason_(message) {}

  const std::string& sentence_id() const { return sentence_id_; }
  std::size_t ordinal() const { return ordinal_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string sentence_id_;
  std::size_t ordinal_;
  std::string reason_;
};

// Entity indices sorted by start offset; position i holds the entity that
// gets ordinal i + 1.
inline std::vector<std::size_t> entity_order(const AnnotatedSentence& s) {
  std::vector<std::size_t> order(s.entities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.entities[a].start < s.entities[b].start;
  });
  return order;
}

inline std::string strip_markers(std::string_view marked);

inline void validate(const AnnotatedSentence& s) {
  if (strip_markers(s.text) != s.text) {
    throw MarkerError(s.id, 0, "text already contains marker-like tags");
  }
  const std::size_t length = cp_length(s.text);
  const auto order = entity_order(s);
  std::size_t prev_end = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const EntityAnnotation& e = s.entities[order[rank]];
    if (e.start >= e.end || e.end > length) {
      throw MarkerError(s.id, rank + 1, "invalid entity span");
    }
    if (rank > 0 && e.start < prev_end) {
      throw MarkerError(s.id, rank + 1, "overlapping entity spans");
    }
    prev_end = e.end;
  }
  for (const RelationAnnotation& r : s.relations) {
    if (r.head >= s.entities.size() || r.tail >= s.entities.size()) {
      throw MarkerError(s.id, 0, "relation references a missing entity");
    }
  }
}

inline MarkedSentence insert_markers(const AnnotatedSentence& s) {
  validate(s);
  const std::u32string text = to_u32(s.text);
  const auto order = entity_order(s);
  std::u32string out;
  std::size_t cursor = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const EntityAnnotation& e = s.entities[order[rank]];
    const std::u32string k = to_u32(std::to_string(rank + 1));
    out.append(text, cursor, e.start - cursor);
    out += U"<" + k + U">";
    out.append(text, e.start, e.end - e.start);
    out += U"</" + k + U">";
    cursor = e.end;
  }
  out.append(text, cursor);
  return {to_utf8(out), order.size()};
}

namespace detail {

struct MarkerTag {
  bool closing = false;
  std::size_t ordinal = 0;
  std::size_t length = 0;  // code points consumed
};

// Recognizes <digits> and </digits> at position i.
inline std::optional<MarkerTag> marker_at(std::u32string_view text, std::size_t i) {
  if (text[i] != U'<') return std::nullopt;
  std::size_t j = i + 1;
  MarkerTag tag;
  if (j < text.size() && text[j] == U'/') {
    tag.closing = true;
    ++j;
  }
  const std::size_t digits_begin = j;
  while (j < text.size() && text[j] >= U'0' && text[j] <= U'9') {
    if (j - digits_begin >= 9) return std::nullopt;
    tag.ordinal = tag.ordinal * 10 + static_cast<std::size_t>(text[j] - U'0');
    ++j;
  }
  if (j == digits_begin || j >= text.size() || text[j] != U'>') return std::nullopt;
  tag.length = j + 1 - i;
  return tag;
}

}  // namespace detail

// Removes every marker wrapper, keeping the wrapped text.
inline std::string strip_markers(std::string_view marked) {
  const std::u32string text = to_u32(marked);
  std::u32string out;
  for (std::size_t i = 0; i < text.size();) {
    if (auto tag = detail::marker_at(text, i)) {
      i += tag->length;
    } else {
      out.push_back(text[i++]);
    }
  }
  return to_utf8(out);
}

struct Extraction {
  std::string clean_text;
  std::vector<Span> spans;  // spans[k - 1] is the content of marker k

  bool operator==(const Extraction&) const = default;
};

// Parses <k>...</k> wrappers that may appear in any order. Content spans are
// trimmed of surrounding whitespace. Every ordinal 1..expected_count must
// appear exactly once, wrappers must not nest.
inline Extraction extract_markers(std::string_view translated, std::size_t expected_count,
                                  std::string_view sentence_id = {}) {
  const std::u32string text = to_u32(translated);
  const std::string id(sentence_id);
  std::u32string clean;
  std::vector<std::optional<Span>> spans(expected_count);
  std::size_t open = 0;  // ordinal of the wrapper being read, 0 if none
  std::size_t open_at = 0;

  for (std::size_t i = 0; i < text.size();) {
    auto tag = detail::marker_at(text, i);
    if (!tag) {
      clean.push_back(text[i++]);
      continue;
    }
    const std::size_t k = tag->ordinal;
    if (k == 0 || k > expected_count) {
      throw MarkerError(id, k, "unexpected marker " + std::to_string(k));
    }
    if (!tag->closing) {
      if (open != 0) {
        throw MarkerError(id, k, "marker " + std::to_string(k) + " nested inside marker " +
                                     std::to_string(open));
      }
      if (spans[k - 1]) throw MarkerError(id, k, "duplicated marker " + std::to_string(k));
      open = k;
      open_at = clean.size();
    } else {
      if (open != k) {
        throw MarkerError(id, k, "malformed closing marker " + std::to_string(k));
      }
      std::size_t b = open_at;
      std::size_t e = clean.size();
      while (b < e && is_space(clean[b])) ++b;
      while (e > b && is_space(clean[e - 1])) --e;
      if (b == e) throw MarkerError(id, k, "empty marker " + std::to_string(k));
      spans[k - 1] = Span{b, e};
      open = 0;
    }
    i += tag->length;
  }
  if (open != 0) {
    throw MarkerError(id, open, "unclosed marker " + std::to_string(open));
  }
  Extraction out;
  out.clean_text = to_utf8(clean);
  for (std::size_t k = 1; k <= expected_count; ++k) {
    if (!spans[k - 1]) throw MarkerError(id, k, "missing marker " + std::to_string(k));
    out.spans.push_back(*spans[k - 1]);
  }
  return out;
}

// Target-language sentence: entity list in source order with spans taken
// from the extraction by ordinal; relations copied unchanged.
inline AnnotatedSentence project_labels(const AnnotatedSentence& source,
                                        const Extraction& extraction) {
  if (extraction.spans.size() != source.entities.size()) {
    throw MarkerError(source.id, 0,
                      "extraction has " + std::to_string(extraction.spans.size()) +
                          " spans for " + std::to_string(source.entities.size()) +
                          " entities");
  }
  AnnotatedSentence target;
  target.id = source.id;
  target.text = extraction.clean_text;
  target.entities.resize(source.entities.size());
  const auto order = entity_order(source);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Span& span = extraction.spans[rank];
    target.entities[order[rank]] = {span.start, span.end, source.entities[order[rank]].label};
  }
  target.relations = source.relations;
  return target;
}

inline nlohmann::ordered_json to_json(const AnnotatedSentence& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["text"] = s.text;
  j["entities"] = nlohmann::ordered_json::array();
  for (const auto& e : s.entities) {
    j["entities"].push_back({{"start", e.start}, {"end", e.end}, {"label", e.label}});
  }
  j["relations"] = nlohmann::ordered_json::array();
  for (const auto& r : s.relations) {
    j["relations"].push_back({{"head", r.head}, {"tail", r.tail}, {"label", r.label}});
  }
  return j;
}

inline AnnotatedSentence annotated_from_json(const nlohmann::ordered_json& j) {
  try {
    AnnotatedSentence s;
    s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    s.text = j.at("text").get<std::string>();
    if (j.contains("entities")) {
      for (const auto& e : j.at("entities")) {
        s.entities.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(),
                              e.at("label").get<std::string>()});
      }
    }
    if (j.contains("relations")) {
      for (const auto& r : j.at("relations")) {
        s.relations.push_back({r.at("head").get<std::size_t>(), r.at("tail").get<std::size_t>(),
                               r.at("label").get<std::string>()});
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string(kDatasetMarker), std::string("bad sentence record: ") + e.what());
  }
}

struct QuarantineEntry {
  std::string id;
  std::string error;
  std::size_t ordinal = 0;

  bool operator==(const QuarantineEntry&) const = default;
};

inline nlohmann::ordered_json to_json(const QuarantineEntry& q) {
  return {{"id", q.id}, {"error", q.error}, {"ordinal", q.ordinal}};
}

// Output of marking a dataset: one marked line per accepted sentence, the
// sentence ids in the same order (the sidecar), and rejected sentences.
struct MarkBatch {
  std::vector<std::string> lines;
  std::vector<std::string> ids;
  std::vector<QuarantineEntry> quarantine;
};

// passthrough: document-level datasets are translated as plain text, so the
// text is emitted unchanged.
inline MarkBatch mark_dataset(const std::vector<nlohmann::ordered_json>& records,
                              bool passthrough = false) {
  MarkBatch batch;
  for (const auto& record : records) {
    const AnnotatedSentence s = annotated_from_json(record);
    if (s.text.find('\n') != std::string::npos || s.text.find('\r') != std::string::npos) {
      batch.quarantine.push_back({s.id, "text contains a line break", 0});
      continue;
    }
    if (passthrough) {
      batch.lines.push_back(s.text);
      batch.ids.push_back(s.id);
      continue;
    }
    try {
      batch.lines.push_back(insert_markers(s).text);
      batch.ids.push_back(s.id);
    } catch (const MarkerError& e) {
      batch.quarantine.push_back({s.id, e.reason(), e.ordinal()});
    }
  }
  return batch;
}

struct UnmarkBatch {
  std::vector<nlohmann::ordered_json> records;
  std::vector<QuarantineEntry> quarantine;
};

// Pairs translated lines with their source records through the id sidecar
// and projects labels. Source fields other than text, entities and relations
// are carried over unchanged.
inline UnmarkBatch unmark_dataset(const std::vector<nlohmann::ordered_json>& sources,
                                  const std::vector<std::string>& ids,
                                  const std::vector<std::string>& translated,
                                  bool passthrough = false) {
  if (ids.size() != translated.size()) {
    throw Error(std::string(kDatasetMarker),
                "translated file has " + std::to_string(translated.size()) + " lines but " +
                    std::to_string(ids.size()) + " ids");
  }
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    by_id.emplace(annotated_from_json(sources[i]).id, i);
  }
  UnmarkBatch batch;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = by_id.find(ids[i]);
    if (it == by_id.end()) {
      throw Error(std::string(kDatasetMarker), "unknown sentence id " + ids[i]);
    }
    nlohmann::ordered_json out = sources[it->second];
    if (passthrough) {
      out["text"] = trim(nfc(translated[i]));
      batch.records.push_back(std::move(out));
      continue;
    }
    const AnnotatedSentence source = annotated_from_json(out);
    try {
      const AnnotatedSentence target = project_labels(
          source, extract_markers(nfc(translated[i]), source.entities.size(), source.id));
      const auto j = to_json(target);
      out["text"] = j["text"];
      out["entities"] = j["entities"];
      out["relations"] = j["relations"];
      batch.records.push_back(std::move(out));
    } catch (const MarkerError& e) {
      batch.quarantine.push_back({source.id, e.reason(), e.ordinal()});
    }
  }
  return batch;
}

}  // namespace kbx
