#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelsql/encoder.hpp"
#include "skelsql/executor.hpp"
#include "skelsql/llm.hpp"
#include "skelsql/relevance.hpp"
#include "skelsql/schema.hpp"
#include "skelsql/skeleton_index.hpp"

namespace skelsql {

struct RunConfig {
  std::filesystem::path tables;
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path db_dir;
  std::filesystem::path index;
  std::filesystem::path cassette;
  std::filesystem::path out;             // report.jsonl; summary goes next to it
  std::filesystem::path dump_relevance;  // optional per-question relevance dumps

  std::size_t k = 8;
  RelevanceParams relevance;  // alpha 0.9, beta 0.5, tau 0.6
  double theta = 0.4;
  std::size_t max_fallbacks = kDefaultMaxFallbacks;

  std::string backend = "reference";
  std::string sidecar_url = "http://127.0.0.1:8765";
  std::string llm = "mock";
  std::string llm_url = "https://api.openai.com/v1";
  std::string model = "text-davinci-003";

  bool exclude_same_db = false;
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::size_t encoder_dimension = ReferenceEncoder::kDefaultDimension;
  std::size_t value_cap = ValueStore::kDefaultCap;
  std::size_t prompt_token_cap = kDefaultPromptTokenCap;
  std::chrono::milliseconds query_timeout = kDefaultQueryTimeout;

  /// Throws ConfigError on out-of-range hyperparameters or unknown selections.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);

/// Schemas, cell values and training examples shared by both subcommands.
struct Corpus {
  std::vector<DatabaseSchema> schemas;
  ValueStore values;
  std::vector<Example> train;

  static Corpus load(const RunConfig& config);
};

struct QuestionRecord {
  std::size_t index = 0;
  std::string question;
  std::string db_id;
  std::string gold_sql;
  std::string skeleton;
  std::vector<Neighbor> retrieved;
  std::vector<ItemId> kept_schema;
  GenerationOutcome outcome;
  bool va = false;
  bool ex = false;
  std::optional<std::string> error;  // set when the question could not be processed
};

nlohmann::json to_json(const QuestionRecord& record);

struct EvalReport {
  std::vector<QuestionRecord> records;
  double va_rate = 0.0;
  double ex_rate = 0.0;
  nlohmann::json config;
  double wall_seconds = 0.0;

  nlohmann::json summary() const;
};

/// Desemanticizes and embeds every training example; saves to config.index
/// when set. Deterministic for the reference backend.
SkeletonIndex build_index(const RunConfig& config, const Corpus& corpus, const EncoderBackend& backend);
SkeletonIndex build_index(const RunConfig& config, const EncoderBackend& backend);

/// Runs the full pipeline on one question. Never throws; failures land in
/// QuestionRecord::error.
QuestionRecord evaluate_question(const RunConfig& config, const Corpus& corpus, const SkeletonIndex& index,
                                 const EncoderBackend& backend, LlmClient& llm, const Example& question,
                                 std::size_t position);

/// Evaluates the dev split with a bounded worker pool; records keep input
/// order. Writes the JSONL report and summary when config.out is set.
EvalReport evaluate(const RunConfig& config, const Corpus& corpus, const SkeletonIndex& index,
                    const EncoderBackend& backend, LlmClient& llm);
EvalReport evaluate(const RunConfig& config, const EncoderBackend& backend, LlmClient& llm);

/// Per-question mock script answering every example with its gold SQL, after
/// `failures_first` unusable completions.
std::map<std::string, std::vector<std::string>> gold_script(std::span<const Example> examples,
                                                             std::size_t failures_first = 0);

/// `<out stem>.summary.json` next to the JSONL report.
std::filesystem::path summary_path(const std::filesystem::path& report);

void write_report(const EvalReport& report, const std::filesystem::path& jsonl_path);

}  // namespace skelsql
