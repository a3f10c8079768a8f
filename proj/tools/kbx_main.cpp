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

// kbx: builds knowledge-anchored bilingual pretraining corpora.
//
//   kbx run      --config <path> [--seed <u64>] [--stage stage1|kbio] [--workers <n>]
//   kbx validate --config <path> [--stage stage1|kbio]
//   kbx stats    [<output_dir>] [--config <path>]
//   kbx mark     --input <jsonl> --marked <txt> --ids <txt> --quarantine <jsonl>
//   kbx unmark   --source <jsonl> --translated <txt> --ids <txt> --output <jsonl>
//                --quarantine <jsonl>
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kbx.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

namespace fs = std::filesystem;

struct RunFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> stage;
  std::optional<std::size_t> workers;
};

kbx::PipelineConfig resolve_config(const RunFlags& flags) {
  kbx::PipelineConfig config = kbx::load_config(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.stage) {
    auto stage = kbx::parse_stage(*flags.stage);
    if (!stage) throw kbx::ValidationError("cli", "stage must be stage1 or kbio");
    config.stage = *stage;
  }
  if (flags.workers) config.workers = *flags.workers;
  return config;
}

std::vector<nlohmann::ordered_json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::ordered_json> records;
  std::size_t line_no = 0;
  for (const std::string& line : kbx::split_lines(kbx::read_file(path, "dataset_marker"))) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw kbx::ParseError("dataset_marker", path.string(), line_no, e.what());
    }
  }
  return records;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    out += nlohmann::ordered_json(item).dump(-1, ' ', false,
                                             nlohmann::json::error_handler_t::replace);
    out.push_back('\n');
  }
  return out;
}

void write_quarantine(const fs::path& path, const std::vector<kbx::QuarantineEntry>& entries) {
  std::vector<nlohmann::ordered_json> rows;
  for (const auto& q : entries) rows.push_back(kbx::to_json(q));
  kbx::write_file(path, to_jsonl(rows), "dataset_marker");
}

void print_warnings(const std::vector<std::string>& warnings) {
  constexpr std::size_t kShown = 20;
  for (std::size_t i = 0; i < warnings.size() && i < kShown; ++i) {
    std::cerr << "warning: " << warnings[i] << "\n";
  }
  if (warnings.size() > kShown) {
    std::cerr << "warning: ... " << warnings.size() - kShown << " more\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-anchored bilingual corpus builder"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Build the corpus described by a config file");
  run->add_option("--config", run_flags.config, "Pipeline config (JSON)")->required();
  run->add_option("--seed", run_flags.seed, "Override the config seed");
  run->add_option("--stage", run_flags.stage, "stage1 or kbio")
      ->check(CLI::IsMember({"stage1", "kbio"}));
  run->add_option("--workers", run_flags.workers, "Worker threads")
      ->check(CLI::PositiveNumber);

  RunFlags validate_flags;
  auto* validate = app.add_subcommand("validate", "Load and validate all inputs");
  validate->add_option("--config", validate_flags.config, "Pipeline config (JSON)")->required();
  validate->add_option("--stage", validate_flags.stage, "stage1 or kbio")
      ->check(CLI::IsMember({"stage1", "kbio"}));

  std::string stats_dir;
  std::string stats_config;
  auto* stats = app.add_subcommand("stats", "Summarize a completed run");
  stats->add_option("output_dir", stats_dir, "Run output directory");
  stats->add_option("--config", stats_config, "Use the output_dir of this config");

  std::string mark_input, mark_output, mark_ids, mark_quarantine;
  bool mark_passthrough = false;
  auto* mark = app.add_subcommand("mark", "Wrap gold entities in numbered markers");
  mark->add_option("--input", mark_input, "Annotated sentences (JSONL)")->required();
  mark->add_option("--marked", mark_output, "Marked text, one sentence per line")->required();
  mark->add_option("--ids", mark_ids, "Sentence id sidecar")->required();
  mark->add_option("--quarantine", mark_quarantine, "Rejected sentences (JSONL)")->required();
  mark->add_flag("--passthrough", mark_passthrough, "Plain text, no markers");

  std::string unmark_source, unmark_translated, unmark_ids, unmark_output, unmark_quarantine;
  bool unmark_passthrough = false;
  auto* unmark = app.add_subcommand("unmark", "Project labels onto translated marked text");
  unmark->add_option("--source", unmark_source, "Source annotated sentences (JSONL)")->required();
  unmark->add_option("--translated", unmark_translated, "Translated marked text")->required();
  unmark->add_option("--ids", unmark_ids, "Sentence id sidecar")->required();
  unmark->add_option("--output", unmark_output, "Projected sentences (JSONL)")->required();
  unmark->add_option("--quarantine", unmark_quarantine, "Sentences for review (JSONL)")
      ->required();
  unmark->add_flag("--passthrough", unmark_passthrough, "Plain text, no markers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) {
      const kbx::PipelineConfig config = resolve_config(run_flags);
      const kbx::RunReport report = kbx::run_pipeline(config);
      print_warnings(report.warnings);
      if (report.skipped_docs > 0) {
        std::cerr << "warning: " << report.skipped_docs
                  << " documents skipped (contain a literal mask placeholder)\n";
      }
      std::cout << "wrote " << config.output_dir.string() << "\n"
                << kbx::format_stats(report.stats);
    } else if (*validate) {
      kbx::PipelineConfig config = resolve_config(validate_flags);
      kbx::validate_config(config);
      const kbx::PipelineInputs inputs = kbx::load_inputs(config);
      print_warnings(inputs.warnings);
      std::cout << "ok\n" << inputs.summary.dump(2) << "\n";
    } else if (*stats) {
      fs::path dir = stats_dir;
      if (dir.empty()) {
        if (stats_config.empty()) {
          throw kbx::ValidationError("cli", "stats needs an output directory or --config");
        }
        dir = kbx::load_config(stats_config).output_dir;
      }
      std::cout << kbx::format_stats(kbx::compute_stats(dir));
    } else if (*mark) {
      const auto batch = kbx::mark_dataset(read_jsonl(mark_input), mark_passthrough);
      kbx::write_file(mark_output, join_lines(batch.lines), "dataset_marker");
      kbx::write_file(mark_ids, join_lines(batch.ids), "dataset_marker");
      write_quarantine(mark_quarantine, batch.quarantine);
      std::cout << "marked " << batch.lines.size() << ", quarantined " << batch.quarantine.size()
                << "\n";
    } else if (*unmark) {
      auto read_lines = [](const std::string& p) {
        return kbx::split_lines(kbx::read_file(p, "dataset_marker"));
      };
      const auto batch = kbx::unmark_dataset(read_jsonl(unmark_source), read_lines(unmark_ids),
                                             read_lines(unmark_translated), unmark_passthrough);
      kbx::write_file(unmark_output, to_jsonl(batch.records), "dataset_marker");
      write_quarantine(unmark_quarantine, batch.quarantine);
      std::cout << "projected " << batch.records.size() << ", quarantined "
                << batch.quarantine.size() << "\n";
    }
  } catch (const kbx::ValidationError& e) {
    std::cerr << "validation error (" << e.module() << "): " << e.detail() << "\n";
    return kExitValidation;
  } catch (const kbx::ParseError& e) {
    std::cerr << "validation error (" << e.module() << "): " << e.detail() << "\n";
    return kExitValidation;
  } catch (const kbx::Error& e) {
    std::cerr << "error (" << e.module() << "): " << e.detail() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
