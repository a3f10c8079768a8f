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

// Bilingual knowledge base: entity lexicon, relation table, fact triples and
// the paired-article registry. All stores are immutable once built and safe
// to share read-only between worker threads.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbx/aho_corasick.hpp"
#include "kbx/error.hpp"
#include "kbx/io.hpp"
#include "kbx/lang.hpp"
#include "kbx/unicode.hpp"

namespace kbx {

inline constexpr std::string_view kKnowledgeStore = "knowledge_store";

struct LoadReport {
  std::size_t rows = 0;
  std::size_t records = 0;
  std::vector<std::string> warnings;
};

struct BilingualEntity {
  std::string entity_id;
  std::vector<std::string> en_surfaces;
  std::vector<std::string> zh_surfaces;

  const std::vector<std::string>& surfaces(Lang lang) const {
    return lang == Lang::en ? en_surfaces : zh_surfaces;
  }
  // Code-switching needs a counterpart in both languages.
  bool switchable() const { return !en_surfaces.empty() && !zh_surfaces.empty(); }

  bool operator==(const BilingualEntity&) const = default;
};

// Surface string index for one language: automaton over the comparison form
// of each surface (casefolded for en, exact for zh) plus the entity owning it.
struct SurfaceIndex {
  AhoCorasick<char32_t> automaton;
  std::vector<std::string> entity_of_pattern;
};

// Canonical form of a surface: NFC, trimmed. Throws ValidationError if the
// surface is empty or violates the script rule of its language.
inline std::string canonical_surface(std::string_view raw, Lang lang) {
  std::string surface = trim(nfc(raw));
  if (surface.empty()) {
    throw ValidationError(std::string(kKnowledgeStore), "empty surface");
  }
  const bool has_cjk = contains_cjk(to_u32(surface));
  if (lang == Lang::en && has_cjk) {
    throw ValidationError(std::string(kKnowledgeStore),
                          "en surface contains CJK characters: " + surface);
  }
  if (lang == Lang::zh && !has_cjk) {
    throw ValidationError(std::string(kKnowledgeStore),
                          "zh surface has no CJK character: " + surface);
  }
  return surface;
}

// Key used for matching: English compares case-insensitively.
inline std::u32string match_key(std::string_view surface, Lang lang) {
  std::u32string text = to_u32(surface);
  return lang == Lang::en ? fold(text) : text;
}

class BilingualLexicon {
 public:
  BilingualLexicon() { build_indexes(); }

  explicit BilingualLexicon(std::map<std::string, BilingualEntity> entities)
      : entities_(std::move(entities)) {
    build_indexes();
  }

  BilingualLexicon(const BilingualLexicon&) = delete;
  BilingualLexicon& operator=(const BilingualLexicon&) = delete;
  BilingualLexicon(BilingualLexicon&&) = default;
  BilingualLexicon& operator=(BilingualLexicon&&) = default;

  const BilingualEntity* find(std::string_view entity_id) const {
    auto it = entities_.find(std::string(entity_id));
    return it == entities_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view entity_id) const { return find(entity_id) != nullptr; }
  std::size_t size() const { return entities_.size(); }
  bool empty() const { return entities_.empty(); }
  const std::map<std::string, BilingualEntity>& entities() const { return entities_; }

  std::size_t switchable_count() const {
    return static_cast<std::size_t>(std::count_if(
        entities_.begin(), entities_.end(),
        [](const auto& kv) { return kv.second.switchable(); }));
  }

  const SurfaceIndex& index(Lang lang) const {
    return lang == Lang::en ? en_index_ : zh_index_;
  }

  bool operator==(const BilingualLexicon& o) const { return entities_ == o.entities_; }

 private:
  void build_indexes() {
    build_index(Lang::en, en_index_);
    build_index(Lang::zh, zh_index_);
  }

  void build_index(Lang lang, SurfaceIndex& index) {
    index = SurfaceIndex{};
    // Entities are visited in id order, so a surface shared by several
    // entities resolves to the smallest id.
    for (const auto& [id, entity] : entities_) {
      for (const std::string& surface : entity.surfaces(lang)) {
        int32_t pattern = index.automaton.add(match_key(surface, lang));
        if (static_cast<std::size_t>(pattern) == index.entity_of_pattern.size()) {
          index.entity_of_pattern.push_back(id);
        }
      }
    }
    index.automaton.build();
  }

  std::map<std::string, BilingualEntity> entities_;
  SurfaceIndex en_index_;
  SurfaceIndex zh_index_;
};

// Accumulates (entity, language, surface) rows and produces a lexicon.
// Surfaces are canonicalized and deduplicated per (entity, language),
// keeping first-seen order.
class LexiconBuilder {
 public:
  void add(std::string_view entity_id, Lang lang, std::string_view raw_surface) {
    std::string id = trim(entity_id);
    if (id.empty()) {
      throw ValidationError(std::string(kKnowledgeStore), "empty entity id");
    }
    std::string surface = canonical_surface(raw_surface, lang);
    BilingualEntity& entity = entities_[id];
    entity.entity_id = id;
    auto& list = lang == Lang::en ? entity.en_surfaces : entity.zh_surfaces;
    if (std::find(list.begin(), list.end(), surface) == list.end()) {
      list.push_back(std::move(surface));
    }
  }

  // Warnings for entities covered in one language only.
  std::vector<std::string> coverage_warnings() const {
    std::vector<std::string> warnings;
    for (const auto& [id, entity] : entities_) {
      if (!entity.switchable()) {
        warnings.push_back("entity " + id + " has " +
                           (entity.en_surfaces.empty() ? "zh" : "en") +
                           " surfaces only; excluded from code-switching");
      }
    }
    return warnings;
  }

  BilingualLexicon build() && { return BilingualLexicon(std::move(entities_)); }

 private:
  std::map<std::string, BilingualEntity> entities_;
};

inline BilingualLexicon parse_lexicon(std::string_view data,
                                      const std::string& source = "<lexicon>",
                                      LoadReport* report = nullptr) {
  LexiconBuilder builder;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(std::string(kKnowledgeStore), source, line_no,
                       "expected 3 tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    auto lang = parse_lang(trim(fields[1]));
    if (!lang) {
      throw ParseError(std::string(kKnowledgeStore), source, line_no,
                       "unknown language tag '" + trim(fields[1]) + "'");
    }
    try {
      builder.add(fields[0], *lang, fields[2]);
    } catch (const ValidationError& e) {
      throw ParseError(std::string(kKnowledgeStore), source, line_no, e.detail());
    }
    ++rows;
  }
  std::vector<std::string> warnings = builder.coverage_warnings();
  BilingualLexicon lexicon = std::move(builder).build();
  if (report) {
    report->rows = rows;
    report->records = lexicon.size();
    report->warnings = std::move(warnings);
  }
  return lexicon;
}

inline BilingualLexicon load_lexicon(const std::filesystem::path& path,
                                     LoadReport* report = nullptr) {
  return parse_lexicon(read_file(path, kKnowledgeStore), path.string(), report);
}

struct RelationType {
  std::string relation_id;
  std::string en_surface;
  std::string zh_surface;

  const std::string& surface(Lang lang) const {
    return lang == Lang::en ? en_surface : zh_surface;
  }
  bool operator==(const RelationType&) const = default;
};

class RelationTable {
 public:
  void add(RelationType relation) {
    relation.relation_id = trim(relation.relation_id);
    relation.en_surface = trim(nfc(relation.en_surface));
    relation.zh_surface = trim(nfc(relation.zh_surface));
    if (relation.relation_id.empty() || relation.en_surface.empty() ||
        relation.zh_surface.empty()) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "relation id and both surfaces must be non-empty");
    }
    std::string id = relation.relation_id;
    if (!relations_.emplace(id, std::move(relation)).second) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "duplicate relation id " + id);
    }
  }

  const RelationType* find(std::string_view id) const {
    auto it = relations_.find(std::string(id));
    return it == relations_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return relations_.size(); }
  const std::map<std::string, RelationType>& relations() const { return relations_; }
  bool operator==(const RelationTable&) const = default;

 private:
  std::map<std::string, RelationType> relations_;
};

inline RelationTable parse_relations(std::string_view data,
                                     const std::string& source = "<relations>",
                                     LoadReport* report = nullptr) {
  RelationTable table;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  for (const std::string& line : split_lines(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(std::string(kKnowledgeStore), source, line_no,
                       "expected 3 tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    try {
      table.add({fields[0], fields[1], fields[2]});
    } catch (const ValidationError& e) {
      throw ParseError(std::string(kKnowledgeStore), source, line_no, e.detail());
    }
    ++rows;
  }
  if (report) {
    report->rows = rows;
    report->records = table.size();
  }
  return table;
}

inline RelationTable load_relations(const std::filesystem::path& path,
                                    LoadReport* report = nullptr) {
  return parse_relations(read_file(path, kKnowledgeStore), path.string(), report);
}

struct FactTriple {
  std::string head_id;
  std::string relation_id;
  std::string tail_id;

  auto operator<=>(const FactTriple&) const = default;
  bool operator==(const FactTriple&) const = default;
};

// Fact triples indexed by their unordered {head, tail} entity pair.
class FactStore {
 public:
  // Returns false when the triple is already stored.
  bool add(FactTriple triple) {
    if (triple.head_id == triple.tail_id) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "fact head equals tail: " + triple.head_id);
    }
    if (!seen_.insert(triple).second) return false;
    by_pair_[pair_key(triple.head_id, triple.tail_id)].push_back(triples_.size());
    triples_.push_back(std::move(triple));
    return true;
  }

  // Triples whose {head, tail} equals {a, b}, in insertion order.
  std::vector<FactTriple> lookup(std::string_view a, std::string_view b) const {
    std::vector<FactTriple> out;
    if (a == b) return out;
    auto it = by_pair_.find(pair_key(a, b));
    if (it == by_pair_.end()) return out;
    out.reserve(it->second.size());
    for (std::size_t i : it->second) out.push_back(triples_[i]);
    return out;
  }

  bool has_pair(std::string_view a, std::string_view b) const {
    return a != b && by_pair_.count(pair_key(a, b)) > 0;
  }

  const std::vector<FactTriple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  bool operator==(const FactStore& o) const { return triples_ == o.triples_; }

 private:
  static std::string pair_key(std::string_view a, std::string_view b) {
    if (b < a) std::swap(a, b);
    std::string key(a);
    key.push_back('\x1f');
    key.append(b);
    return key;
  }

  std::vector<FactTriple> triples_;
  std::set<FactTriple> seen_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_pair_;
};

inline FactStore parse_facts(std::string_view data,
                             const BilingualLexicon& lexicon,
                             const RelationTable& relations,
                             const std::string& source = "<facts>",
                             LoadReport* report = nullptr) {
  FactStore store;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  auto fail = [&](const std::string& message) {
    throw ParseError(std::string(kKnowledgeStore), source, line_no, message);
  };
  for (const std::string& line : split_lines(data)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      fail("expected 3 tab-separated fields, found " +
           std::to_string(fields.size()));
    }
    FactTriple triple{trim(fields[0]), trim(fields[1]), trim(fields[2])};
    if (!lexicon.contains(triple.head_id)) fail("unknown entity " + triple.head_id);
    if (!relations.find(triple.relation_id)) {
      fail("unknown relation " + triple.relation_id);
    }
    if (!lexicon.contains(triple.tail_id)) fail("unknown entity " + triple.tail_id);
    if (triple.head_id == triple.tail_id) fail("fact head equals tail: " + triple.head_id);
    store.add(std::move(triple));
    ++rows;
  }
  if (report) {
    report->rows = rows;
    report->records = store.size();
  }
  return store;
}

inline FactStore load_facts(const std::filesystem::path& path,
                            const BilingualLexicon& lexicon,
                            const RelationTable& relations,
                            LoadReport* report = nullptr) {
  return parse_facts(read_file(path, kKnowledgeStore), lexicon, relations,
                     path.string(), report);
}

struct Article {
  std::string id;
  Lang lang = Lang::en;
  std::vector<std::string> paragraphs;

  bool operator==(const Article&) const = default;
};

// Articles keyed per language (article ids are only unique within one
// language edition) plus one-to-one en/zh pair links.
class PassageRegistry {
 public:
  void add_article(Article article) {
    if (article.paragraphs.empty()) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "empty article " + article.id);
    }
    auto& table = articles(article.lang);
    std::string id = article.id;
    if (!table.emplace(id, std::move(article)).second) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "duplicate article " + id);
    }
  }

  void add_link(const std::string& en_id, const std::string& zh_id) {
    if (!en_articles_.count(en_id)) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "pair link to missing en article " + en_id);
    }
    if (!zh_articles_.count(zh_id)) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "pair link to missing zh article " + zh_id);
    }
    if (en_to_zh_.count(en_id)) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "en article " + en_id + " linked more than once");
    }
    if (zh_to_en_.count(zh_id)) {
      throw ValidationError(std::string(kKnowledgeStore),
                            "zh article " + zh_id + " linked more than once");
    }
    en_to_zh_.emplace(en_id, zh_id);
    zh_to_en_.emplace(zh_id, en_id);
  }

  const std::map<std::string, Article>& articles(Lang lang) const {
    return lang == Lang::en ? en_articles_ : zh_articles_;
  }

  const Article* find(Lang lang, std::string_view id) const {
    const auto& table = articles(lang);
    auto it = table.find(std::string(id));
    return it == table.end() ? nullptr : &it->second;
  }

  std::optional<std::string> partner(Lang lang, std::string_view id) const {
    const auto& links = lang == Lang::en ? en_to_zh_ : zh_to_en_;
    auto it = links.find(std::string(id));
    if (it == links.end()) return std::nullopt;
    return it->second;
  }

  bool is_linked(std::string_view en_id, std::string_view zh_id) const {
    auto it = en_to_zh_.find(std::string(en_id));
    return it != en_to_zh_.end() && it->second == zh_id;
  }

  bool is_orphan(Lang lang, std::string_view id) const {
    return !partner(lang, id).has_value();
  }

  // (en_article_id, zh_article_id), ordered by en id.
  std::vector<std::pair<std::string, std::string>> pair_links() const {
    return {en_to_zh_.begin(), en_to_zh_.end()};
  }

  std::size_t article_count() const { return en_articles_.size() + zh_articles_.size(); }

  bool operator==(const PassageRegistry&) const = default;

 private:
  std::map<std::string, Article>& articles(Lang lang) {
    return lang == Lang::en ? en_articles_ : zh_articles_;
  }

  std::map<std::string, Article> en_articles_;
  std::map<std::string, Article> zh_articles_;
  std::map<std::string, std::string> en_to_zh_;
  std::map<std::string, std::string> zh_to_en_;
};

// Paragraphs are separated by blank lines. Lines inside a paragraph are
// joined with a space for en and directly for zh.
inline std::vector<std::string> parse_paragraphs(std::string_view data, Lang lang) {
  std::vector<std::string> paragraphs;
  std::string current;
  auto flush = [&] {
    std::string p = trim(nfc(current));
    if (!p.empty()) paragraphs.push_back(std::move(p));
    current.clear();
  };
  for (const std::string& raw : split_lines(data)) {
    std::string line = trim(raw);
    if (line.empty()) {
      flush();
      continue;
    }
    if (!current.empty() && lang == Lang::en) current.push_back(' ');
    current += line;
  }
  flush();
  return paragraphs;
}

inline constexpr std::string_view kManifestName = "manifest.tsv";

// Layout: <dir>/manifest.tsv with "en_id<TAB>zh_id" rows, and article texts
// at <dir>/en/<id>.txt and <dir>/zh/<id>.txt.
inline PassageRegistry load_passage_registry(const std::filesystem::path& dir,
                                             LoadReport* report = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(std::string(kKnowledgeStore),
                "passage registry is not a directory: " + dir.string());
  }
  PassageRegistry registry;
  LoadReport local;
  std::set<std::pair<Lang, std::string>> empty_articles;
  for (Lang lang : {Lang::en, Lang::zh}) {
    fs::path sub = dir / std::string(to_string(lang));
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(sub)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      Article article{file.stem().string(), lang,
                      parse_paragraphs(read_file(file, kKnowledgeStore), lang)};
      if (article.paragraphs.empty()) {
        local.warnings.push_back("empty article " + std::string(to_string(lang)) +
                                 "/" + article.id + " excluded");
        empty_articles.emplace(lang, article.id);
        continue;
      }
      registry.add_article(std::move(article));
    }
  }
  fs::path manifest = dir / std::string(kManifestName);
  if (fs::exists(manifest)) {
    std::size_t line_no = 0;
    for (const std::string& line : split_lines(read_file(manifest, kKnowledgeStore))) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split_tabs(line);
      if (fields.size() != 2) {
        throw ParseError(std::string(kKnowledgeStore), manifest.string(), line_no,
                         "expected 2 tab-separated fields, found " +
                             std::to_string(fields.size()));
      }
      std::string en_id = trim(fields[0]);
      std::string zh_id = trim(fields[1]);
      ++local.rows;
      if (empty_articles.count({Lang::en, en_id}) ||
          empty_articles.count({Lang::zh, zh_id})) {
        local.warnings.push_back("pair link " + en_id + " -> " + zh_id +
                                 " dropped: empty article");
        continue;
      }
      try {
        registry.add_link(en_id, zh_id);
      } catch (const ValidationError& e) {
        throw ParseError(std::string(kKnowledgeStore), manifest.string(), line_no,
                         e.detail());
      }
    }
  } else {
    local.warnings.push_back("no " + std::string(kManifestName) +
                             "; registry has zero pair links");
  }
  local.records = registry.article_count();
  if (report) *report = std::move(local);
  return registry;
}

}  // namespace kbx
