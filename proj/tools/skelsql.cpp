// skelsql: build a skeleton index from a training split, or evaluate a dev
// split against it.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "skelsql/error.hpp"
#include "skelsql/harness.hpp"
#include "skelsql/spider.hpp"

namespace {

using namespace skelsql;

constexpr int kExitConfig = 2;
constexpr int kExitFatal = 3;

struct CliOptions {
  RunConfig config;
  std::filesystem::path mock_script;
  bool mock_gold = false;
  bool record = false;
  std::string log_level = "info";
};

void add_shared_flags(CLI::App& cmd, CliOptions& o) {
  auto& c = o.config;
  cmd.add_option("--tables", c.tables, "Spider tables.json")->required();
  cmd.add_option("--train", c.train, "training split (demonstration pool)")->required();
  cmd.add_option("--db-dir", c.db_dir, "directory holding <db_id>/<db_id>.sqlite")->required();
  cmd.add_option("--index", c.index, "skeleton index file")->required();
  cmd.add_option("--alpha", c.relevance.alpha, "POS prior weight")->capture_default_str();
  cmd.add_option("--beta", c.relevance.beta, "matching-matrix weight")->capture_default_str();
  cmd.add_option("--tau", c.relevance.tau, "mask threshold")->capture_default_str();
  cmd.add_option("--backend", c.backend, "encoder backend: reference | sidecar")->capture_default_str();
  cmd.add_option("--sidecar-url", c.sidecar_url, "encoder sidecar base URL")->capture_default_str();
  cmd.add_option("--seed", c.seed, "seed for the reference encoder's hash embeddings")->capture_default_str();
  cmd.add_option("--workers", c.workers, "worker threads")->capture_default_str();
  cmd.add_option("--log-level", o.log_level, "trace | debug | info | warn | error | off")->capture_default_str();
}

std::unique_ptr<EncoderBackend> make_backend(const RunConfig& c) {
  if (c.backend == "sidecar") {
    SidecarOptions options;
    options.url = c.sidecar_url;
    return std::make_unique<SidecarEncoder>(options);
  }
  return std::make_unique<ReferenceEncoder>(c.encoder_dimension, c.seed);
}

std::map<std::string, std::vector<std::string>> read_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileMissing, "cannot open mock script '" + path.string() + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    if (!doc.is_object()) throw Error(ErrorCode::kConfigError, "mock script must map question text to completions");
    std::map<std::string, std::vector<std::string>> script;
    for (const auto& [question, replies] : doc.items()) {
      script[question] = replies.is_array() ? replies.get<std::vector<std::string>>()
                                            : std::vector<std::string>{replies.get<std::string>()};
    }
    return script;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, "bad mock script '" + path.string() + "': " + e.what());
  }
}

std::unique_ptr<LlmClient> make_llm(const CliOptions& o) {
  const auto& c = o.config;
  auto http = [&] {
    if (const char* key = std::getenv("LLM_API_KEY"); !key || !*key) {
      throw Error(ErrorCode::kConfigError, "LLM_API_KEY is not set");
    }
    HttpLlmOptions options;
    options.url = c.llm_url;
    options.max_in_flight = c.workers;
    return std::make_unique<HttpLlm>(options);
  };
  if (c.llm == "http") return http();
  if (c.llm == "replay") {
    return std::make_unique<ReplayLlm>(c.cassette, o.record ? std::shared_ptr<LlmClient>(http()) : nullptr);
  }

  if (o.mock_gold == !o.mock_script.empty()) {
    throw Error(ErrorCode::kConfigError, "--llm mock needs exactly one of --mock-gold or --mock-script");
  }
  if (o.mock_gold) {
    const auto schemas = load_schemas(c.tables, c.db_dir);
    return std::make_unique<MockLlm>(gold_script(load_examples(c.dev, schemas)));
  }
  return std::make_unique<MockLlm>(read_mock_script(o.mock_script));
}

int run(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.code() == ErrorCode::kConfigError || e.code() == ErrorCode::kCredentialMissing) return kExitConfig;
    return kExitFatal;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton-retrieval Text-to-SQL: index building and evaluation"};
  app.require_subcommand(1);

  CliOptions build_opts;
  auto* build = app.add_subcommand("build-index", "desemanticize the training split and write the skeleton index");
  add_shared_flags(*build, build_opts);

  CliOptions eval_opts;
  auto& ec = eval_opts.config;
  auto* eval = app.add_subcommand("evaluate", "run the pipeline on a dev split and report VA/EX");
  add_shared_flags(*eval, eval_opts);
  eval->add_option("--dev", ec.dev, "dev split to evaluate")->required();
  eval->add_option("--k", ec.k, "demonstrations per prompt")->capture_default_str();
  eval->add_option("--theta", ec.theta, "schema filter threshold")->capture_default_str();
  eval->add_option("--max-fallbacks", ec.max_fallbacks, "fallback revisions per question")->capture_default_str();
  eval->add_option("--llm", ec.llm, "mock | replay | http")->capture_default_str();
  eval->add_option("--llm-url", ec.llm_url, "OpenAI-compatible base URL")->capture_default_str();
  eval->add_option("--model", ec.model, "completion model name")->capture_default_str();
  eval->add_option("--cassette", ec.cassette, "JSONL cassette for --llm replay");
  eval->add_flag("--record", eval_opts.record, "with --llm replay, forward misses to --llm-url and record them");
  eval->add_option("--mock-script", eval_opts.mock_script, "JSON object: question text -> completion(s)");
  eval->add_flag("--mock-gold", eval_opts.mock_gold, "mock answers every question with its gold SQL");
  eval->add_flag("--exclude-same-db", ec.exclude_same_db, "never retrieve demonstrations from the question's db");
  eval->add_option("--out", ec.out, "report.jsonl (summary written next to it)");
  eval->add_option("--dump-relevance", ec.dump_relevance, "directory for per-question relevance JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (build->parsed()) {
    return run([&] {
      spdlog::set_level(spdlog::level::from_str(build_opts.log_level));
      const auto backend = make_backend(build_opts.config);
      build_index(build_opts.config, *backend);
    });
  }
  return run([&] {
    spdlog::set_level(spdlog::level::from_str(eval_opts.log_level));
    ec.validate();
    const auto backend = make_backend(ec);
    const auto llm = make_llm(eval_opts);
    const auto report = evaluate(ec, *backend, *llm);
    std::cout << report.summary().dump(2) << '\n';
  });
}
