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

// End-to-end corpus build: load the knowledge base and corpora, run the
// augmentations and collation per document, mix streams and write JSONL plus
// a stats report and a reproducibility manifest.

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kbx/entity_switcher.hpp"
#include "kbx/error.hpp"
#include "kbx/fact_injector.hpp"
#include "kbx/io.hpp"
#include "kbx/knowledge_store.hpp"
#include "kbx/masking_collator.hpp"
#include "kbx/parallel.hpp"
#include "kbx/passage_pairer.hpp"
#include "kbx/random.hpp"

namespace kbx {

inline constexpr std::string_view kCli = "cli";

enum class Stage { stage1, kbio };

inline std::string_view to_string(Stage stage) {
  return stage == Stage::stage1 ? "stage1" : "kbio";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  if (s == "stage1") return Stage::stage1;
  if (s == "kbio") return Stage::kbio;
  return std::nullopt;
}

struct PipelineConfig {
  std::filesystem::path lexicon;
  std::filesystem::path relations;
  std::filesystem::path facts;
  std::filesystem::path mono_en;
  std::filesystem::path mono_zh;
  std::filesystem::path passages;
  std::filesystem::path output_dir;

  Stage stage = Stage::kbio;
  uint64_t seed = 0;
  double ratio = 0.15;
  std::size_t switch_cap = 10;
  std::size_t max_facts = 3;
  std::size_t max_segment_tokens = 256;
  std::size_t pair_budget = 30000;
  std::size_t entity_max_tokens = 3;
  std::string separator = " [SEP] ";
  bool random_synonym = false;
  std::size_t workers = 1;

  // Everything that influences output bytes. Paths and worker count are
  // excluded; inputs are identified by content digest instead.
  nlohmann::ordered_json knobs() const {
    nlohmann::ordered_json j;
    j["stage"] = to_string(stage);
    j["seed"] = seed;
    j["ratio"] = ratio;
    j["switch_cap"] = switch_cap;
    j["max_facts"] = max_facts;
    j["max_segment_tokens"] = max_segment_tokens;
    j["pair_budget"] = pair_budget;
    j["entity_max_tokens"] = entity_max_tokens;
    j["separator"] = separator;
    j["random_synonym"] = random_synonym;
    return j;
  }
};

// Flat JSON object. Relative paths resolve against base_dir. Unknown keys are
// rejected so a misspelled constant never silently falls back to a default.
inline PipelineConfig parse_config(const nlohmann::ordered_json& j,
                                   const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ValidationError(std::string(kCli), "config must be a JSON object");
  PipelineConfig c;
  auto path = [&](const nlohmann::ordered_json& v) {
    std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  auto count = [&](const std::string& key, const nlohmann::ordered_json& v) {
    if (!v.is_number_integer() || v.get<int64_t>() < 0) {
      throw ValidationError(std::string(kCli), key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lexicon") c.lexicon = path(v);
      else if (key == "relations") c.relations = path(v);
      else if (key == "facts") c.facts = path(v);
      else if (key == "mono_en") c.mono_en = path(v);
      else if (key == "mono_zh") c.mono_zh = path(v);
      else if (key == "passages") c.passages = path(v);
      else if (key == "output_dir") c.output_dir = path(v);
      else if (key == "stage") {
        auto stage = parse_stage(v.get<std::string>());
        if (!stage) throw ValidationError(std::string(kCli), "stage must be stage1 or kbio");
        c.stage = *stage;
      } else if (key == "seed") {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0)) {
          throw ValidationError(std::string(kCli), "seed must be a u64");
        }
        c.seed = v.get<uint64_t>();
      } else if (key == "ratio") {
        if (!v.is_number()) throw ValidationError(std::string(kCli), "ratio must be a number");
        c.ratio = v.get<double>();
      } else if (key == "switch_cap") c.switch_cap = count(key, v);
      else if (key == "max_facts") c.max_facts = count(key, v);
      else if (key == "max_segment_tokens") c.max_segment_tokens = count(key, v);
      else if (key == "pair_budget") c.pair_budget = count(key, v);
      else if (key == "entity_max_tokens") c.entity_max_tokens = count(key, v);
      else if (key == "workers") c.workers = count(key, v);
      else if (key == "separator") c.separator = v.get<std::string>();
      else if (key == "random_synonym") c.random_synonym = v.get<bool>();
      else throw ValidationError(std::string(kCli), "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(kCli), std::string("bad config value: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(read_file(path, kCli));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(kCli), path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline void validate_config(const PipelineConfig& c) {
  auto fail = [](const std::string& m) { throw ValidationError(std::string(kCli), m); };
  if (!(c.ratio > 0.0 && c.ratio <= 1.0)) fail("ratio must be in (0, 1]");
  if (c.switch_cap == 0) fail("switch_cap must be positive");
  if (c.max_facts == 0) fail("max_facts must be positive");
  if (c.max_segment_tokens == 0) fail("max_segment_tokens must be positive");
  if (c.entity_max_tokens == 0) fail("entity_max_tokens must be positive");
  if (c.workers == 0) fail("workers must be positive");
  if (c.output_dir.empty()) fail("output_dir is required");
  auto need_file = [&](const std::filesystem::path& p, const char* key) {
    if (p.empty()) fail(std::string(key) + " is required");
    if (!std::filesystem::is_regular_file(p)) fail(std::string(key) + " not found: " + p.string());
  };
  need_file(c.lexicon, "lexicon");
  if (c.mono_en.empty() && c.mono_zh.empty()) fail("at least one of mono_en, mono_zh is required");
  if (!c.mono_en.empty()) need_file(c.mono_en, "mono_en");
  if (!c.mono_zh.empty()) need_file(c.mono_zh, "mono_zh");
  if (c.stage == Stage::kbio) {
    if (c.pair_budget < 3) fail("pair_budget must be at least 3");
    need_file(c.relations, "relations");
    need_file(c.facts, "facts");
    if (c.passages.empty()) fail("passages is required");
    if (!std::filesystem::is_directory(c.passages)) {
      fail("passages not found: " + c.passages.string());
    }
  }
}

struct MonoDoc {
  std::string id;
  Lang lang = Lang::en;
  std::string text;
};

// One sample per line; blank lines are skipped. Ids are "<lang>-<line>" with
// the line number zero-padded so id order equals input order.
inline std::vector<MonoDoc> load_mono_corpus(const std::filesystem::path& path, Lang lang) {
  std::vector<MonoDoc> docs;
  std::size_t line_no = 0;
  char id[32];
  for (const std::string& line : split_lines(read_file(path, kCli))) {
    ++line_no;
    std::string text = trim(nfc(line));
    if (text.empty()) continue;
    std::snprintf(id, sizeof(id), "%s-%07zu", std::string(to_string(lang)).c_str(), line_no);
    docs.push_back({id, lang, std::move(text)});
  }
  return docs;
}

struct PipelineInputs {
  BilingualLexicon lexicon;
  RelationTable relations;
  FactStore facts;
  PassageRegistry registry;
  std::vector<MonoDoc> docs;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<std::string> warnings;
};

inline PipelineInputs load_inputs(const PipelineConfig& c) {
  PipelineInputs in;
  LoadReport report;
  in.lexicon = load_lexicon(c.lexicon, &report);
  in.summary["lexicon"] = {{"rows", report.rows}, {"entities", report.records},
                           {"switchable", in.lexicon.switchable_count()}};
  in.warnings.insert(in.warnings.end(), report.warnings.begin(), report.warnings.end());
  if (c.stage == Stage::kbio) {
    in.relations = load_relations(c.relations, &report);
    in.summary["relations"] = report.records;
    in.facts = load_facts(c.facts, in.lexicon, in.relations, &report);
    in.summary["facts"] = {{"rows", report.rows}, {"triples", report.records}};
    report = {};
    in.registry = load_passage_registry(c.passages, &report);
    in.summary["passages"] = {{"articles", report.records},
                              {"pair_links", in.registry.pair_links().size()}};
    in.warnings.insert(in.warnings.end(), report.warnings.begin(), report.warnings.end());
  }
  for (auto [path, lang] : {std::pair{c.mono_en, Lang::en}, std::pair{c.mono_zh, Lang::zh}}) {
    if (path.empty()) continue;
    auto docs = load_mono_corpus(path, lang);
    in.summary[std::string("mono_") + std::string(to_string(lang))] = docs.size();
    for (auto& d : docs) in.docs.push_back(std::move(d));
  }
  if (in.docs.empty()) throw ValidationError(std::string(kCli), "monolingual corpora are empty");
  return in;
}

// Digest of a file, or of a directory tree (relative paths + contents).
inline std::string input_digest(const std::filesystem::path& p) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(p)) return sha256_hex(read_file(p, kCli));
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(p)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const fs::path& f : files) {
    acc += fs::relative(f, p).generic_string();
    acc.push_back('\0');
    acc += sha256_hex(read_file(f, kCli));
    acc.push_back('\n');
  }
  return sha256_hex(acc);
}

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kStatsFile = "stats.json";

namespace detail {

struct DocOutput {
  bool skipped = false;
  std::optional<TrainingExample> mono;
  std::optional<TrainingExample> entity;
  std::optional<TrainingExample> fact;
  SwitchBalance balance;
};

inline std::string jsonl(const std::vector<const TrainingExample*>& examples) {
  std::string out;
  for (const TrainingExample* e : examples) {
    out += to_jsonl_line(*e);
    out.push_back('\n');
  }
  return out;
}

inline std::vector<std::string_view> output_names() {
  return {"stage1.jsonl", "entity.jsonl", "fact.jsonl", "passage.jsonl",
          "mono.jsonl",   "mixed.jsonl",  kStatsFile,   kManifestFile};
}

}  // namespace detail

nlohmann::ordered_json compute_stats(const std::filesystem::path& output_dir);

struct RunReport {
  nlohmann::ordered_json manifest;
  nlohmann::ordered_json stats;
  std::vector<std::string> warnings;
  std::size_t skipped_docs = 0;
};

inline RunReport run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  validate_config(config);
  PipelineInputs in = load_inputs(config);

  const uint64_t seed = config.seed;
  std::vector<detail::DocOutput> results(in.docs.size());
  const SwitchOptions switch_options{config.switch_cap, config.random_synonym};
  const InjectOptions inject_options{config.max_facts, config.separator, " "};
  const Stage1Options stage1_options{config.ratio, config.entity_max_tokens};

  parallel_for(in.docs.size(), config.workers, [&](std::size_t i) {
    const MonoDoc& doc = in.docs[i];
    detail::DocOutput& out = results[i];
    // A literal placeholder would break gold refill.
    if (doc.text.find(kMaskToken) != std::string::npos) {
      out.skipped = true;
      return;
    }
    const std::u32string text = to_u32(doc.text);
    const std::vector<Mention> mentions = find_mentions(text, doc.lang, in.lexicon);
    out.mono = stage1_mask(doc.text, doc.lang, mentions, derive_seed(seed, doc.id, "stage1"),
                           stage1_options, doc.id);
    if (config.stage == Stage::stage1) return;

    SwitchedDoc switched = code_switch(doc.text, doc.lang, mentions, in.lexicon,
                                       derive_seed(seed, doc.id, "switch"), switch_options);
    out.balance.add(switched);
    out.entity = mask_entities(switched, switched.mentions, config.ratio,
                               derive_seed(seed, doc.id, "entity_mask"), doc.id);
    const std::vector<FactMatch> matches = match_facts(mentions, in.facts);
    AugmentedDoc augmented = inject_facts(doc.text, doc.lang, matches, in.lexicon, in.relations,
                                          derive_seed(seed, doc.id, "facts"), inject_options);
    if (!augmented.appended_facts.empty()) out.fact = mask_relation(augmented, doc.id);
  });

  RunReport report;
  report.warnings = in.warnings;
  std::map<std::string, std::string> files;  // name -> contents
  std::vector<const TrainingExample*> mono;
  std::vector<const TrainingExample*> entity;
  std::vector<const TrainingExample*> fact;
  SwitchBalance balance;
  for (const detail::DocOutput& r : results) {
    if (r.skipped) {
      ++report.skipped_docs;
      continue;
    }
    mono.push_back(&*r.mono);
    if (r.entity) entity.push_back(&*r.entity);
    if (r.fact) fact.push_back(&*r.fact);
    balance.add(r.balance);
  }
  if (mono.empty()) throw Error(std::string(kCli), "no usable documents");

  std::vector<TrainingExample> pairs;
  if (config.stage == Stage::stage1) {
    files["stage1.jsonl"] = detail::jsonl(mono);
  } else {
    const auto sampled = build_pairs(in.registry, config.pair_budget, seed, config.max_segment_tokens);
    pairs.reserve(sampled.size());
    char id[32];
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      std::snprintf(id, sizeof(id), "pair-%07zu", i + 1);
      pairs.push_back(make_pair_example(sampled[i], id));
    }
    std::vector<const TrainingExample*> passage;
    for (const auto& p : pairs) passage.push_back(&p);

    std::vector<const TrainingExample*> bilingual;
    bilingual.insert(bilingual.end(), entity.begin(), entity.end());
    bilingual.insert(bilingual.end(), fact.begin(), fact.end());
    bilingual.insert(bilingual.end(), passage.begin(), passage.end());
    Rng(derive_seed(seed, "bilingual", "shuffle")).shuffle(bilingual);
    std::vector<const TrainingExample*> mixed;
    mix_streams(mono, bilingual, derive_seed(seed, "mix"),
                [&](const TrainingExample* e, StreamSource) { mixed.push_back(e); });

    files["entity.jsonl"] = detail::jsonl(entity);
    files["fact.jsonl"] = detail::jsonl(fact);
    files["passage.jsonl"] = detail::jsonl(passage);
    files["mono.jsonl"] = detail::jsonl(mono);
    files["mixed.jsonl"] = detail::jsonl(mixed);
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "kbx";
  manifest["format_version"] = 1;
  manifest["stage"] = to_string(config.stage);
  manifest["seed"] = seed;
  manifest["config_hash"] = sha256_hex(config.knobs().dump());
  manifest["knobs"] = config.knobs();
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  auto digest = [&](const char* key, const fs::path& p) {
    if (!p.empty()) inputs[key] = input_digest(p);
  };
  digest("lexicon", config.lexicon);
  if (config.stage == Stage::kbio) {
    digest("relations", config.relations);
    digest("facts", config.facts);
    digest("passages", config.passages);
  }
  digest("mono_en", config.mono_en);
  digest("mono_zh", config.mono_zh);
  manifest["inputs"] = inputs;
  manifest["input_summary"] = in.summary;
  manifest["skipped_docs"] = report.skipped_docs;
  manifest["switch_balance"] = {{"en_to_zh", balance.en_to_zh}, {"zh_to_en", balance.zh_to_en}};
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  for (const auto& [name, contents] : files) {
    outputs[name] = {{"records", static_cast<std::size_t>(
                                     std::count(contents.begin(), contents.end(), '\n'))},
                     {"sha256", sha256_hex(contents)}};
  }
  manifest["outputs"] = outputs;

  // Stage everything in a scratch directory, then move into place.
  fs::create_directories(config.output_dir);
  const fs::path scratch = config.output_dir / ".kbx-partial";
  try {
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    for (const auto& [name, contents] : files) write_file(scratch / name, contents, kCli);
    write_file(scratch / std::string(kManifestFile), manifest.dump(2) + "\n", kCli);
    report.stats = compute_stats(scratch);
    write_file(scratch / std::string(kStatsFile), report.stats.dump(2) + "\n", kCli);
    for (std::string_view name : detail::output_names()) {
      fs::remove(config.output_dir / std::string(name));
    }
    for (const auto& entry : fs::directory_iterator(scratch)) {
      fs::rename(entry.path(), config.output_dir / entry.path().filename());
    }
    fs::remove_all(scratch);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
    throw;
  }
  report.manifest = std::move(manifest);
  return report;
}

// Recounts everything from the emitted JSONL named in the manifest.
inline nlohmann::ordered_json compute_stats(const std::filesystem::path& output_dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = output_dir / std::string(kManifestFile);
  if (!fs::is_regular_file(manifest_path)) {
    throw Error(std::string(kCli), "missing manifest in " + output_dir.string());
  }
  const auto manifest = nlohmann::ordered_json::parse(read_file(manifest_path, kCli));
  nlohmann::ordered_json stats;
  stats["stage"] = manifest.at("stage");
  stats["seed"] = manifest.at("seed");
  stats["files"] = nlohmann::ordered_json::object();
  nlohmann::ordered_json levels = nlohmann::ordered_json::object();
  for (const auto& [name, info] : manifest.at("outputs").items()) {
    std::map<std::string, std::size_t> tasks;
    std::map<std::string, std::size_t> kinds;
    std::map<std::string, std::size_t> kind_tokens;
    std::map<std::string, std::size_t> labels;
    std::size_t records = 0;
    std::size_t tokens = 0;
    std::size_t zero_targets = 0;
    std::size_t fallback = 0;
    SwitchBalance balance;
    for (const std::string& line : split_lines(read_file(output_dir / name, kCli))) {
      if (line.empty()) continue;
      const TrainingExample e = parse_jsonl_line(line);
      ++records;
      ++tasks[std::string(to_string(e.task))];
      if (e.task == Task::passage_rel) {
        tokens += count_word_tokens(to_u32(e.text)) + count_word_tokens(to_u32(e.text_b));
        ++labels[std::string(to_string(*e.pair_label))];
        continue;
      }
      tokens += count_word_tokens(to_u32(unmask(e)));
      if (e.targets.empty()) ++zero_targets;
      for (const MaskTarget& t : e.targets) {
        ++kinds[std::string(to_string(t.kind))];
        kind_tokens[std::string(to_string(t.kind))] +=
            std::max<std::size_t>(1, count_word_tokens(to_u32(t.gold)));
      }
      if (e.meta.value("entity_fallback", false)) ++fallback;
      if (e.task == Task::entity_mlm) {
        const std::size_t n = e.meta.value("switched", std::size_t{0});
        (e.meta.value("lang", std::string("en")) == "en" ? balance.en_to_zh : balance.zh_to_en) += n;
      }
    }
    nlohmann::ordered_json f;
    f["records"] = records;
    f["tokens"] = tokens;
    f["tasks"] = tasks;
    f["mask_kinds"] = kinds;
    f["masked_tokens"] = kind_tokens;
    if (!labels.empty()) f["pair_labels"] = labels;
    f["zero_target_records"] = zero_targets;
    if (fallback > 0) f["entity_fallback_records"] = fallback;
    if (balance.en_to_zh + balance.zh_to_en > 0) {
      f["switch_balance"] = {{"en_to_zh", balance.en_to_zh}, {"zh_to_en", balance.zh_to_en}};
    }
    stats["files"][name] = f;
    if (name == "entity.jsonl") levels["entity"] = tokens;
    if (name == "fact.jsonl") levels["fact"] = tokens;
    if (name == "passage.jsonl") levels["passage"] = tokens;
  }
  if (!levels.empty()) stats["level_tokens"] = levels;
  return stats;
}

inline std::string format_stats(const nlohmann::ordered_json& stats) {
  std::ostringstream out;
  out << "stage: " << stats.at("stage").get<std::string>() << "\n";
  out << "seed: " << stats.at("seed").dump() << "\n";
  if (stats.contains("level_tokens")) {
    out << "tokens per level:\n";
    for (const auto& [level, n] : stats["level_tokens"].items()) {
      out << "  " << level << ": " << n.dump() << "\n";
    }
  }
  for (const auto& [name, f] : stats.at("files").items()) {
    out << name << ": " << f["records"].dump() << " records, " << f["tokens"].dump()
        << " tokens\n";
    for (const auto& [task, n] : f["tasks"].items()) {
      out << "  task " << task << ": " << n.dump() << "\n";
    }
    for (const auto& [kind, n] : f["mask_kinds"].items()) {
      out << "  mask " << kind << ": " << n.dump() << " targets, "
          << f["masked_tokens"][kind].dump() << " tokens\n";
    }
    if (f.contains("pair_labels")) {
      for (const auto& [label, n] : f["pair_labels"].items()) {
        out << "  pair " << label << ": " << n.dump() << "\n";
      }
    }
    if (f["zero_target_records"].get<std::size_t>() > 0) {
      out << "  records without targets: " << f["zero_target_records"].dump() << "\n";
    }
    if (f.contains("entity_fallback_records")) {
      out << "  stage-1 records without entity candidates: "
          << f["entity_fallback_records"].dump() << "\n";
    }
    if (f.contains("switch_balance")) {
      out << "  replacements en->zh: " << f["switch_balance"]["en_to_zh"].dump()
          << ", zh->en: " << f["switch_balance"]["zh_to_en"].dump() << "\n";
    }
  }
  return out.str();
}

}  // namespace kbx
