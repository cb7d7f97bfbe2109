#include "skelsql/harness.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "skelsql/error.hpp"
#include "skelsql/prompt.hpp"
#include "skelsql/spider.hpp"

namespace skelsql {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfigError, message);
}

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

json attempt_json(const Attempt& a) {
  return {{"kind", a.kind == PromptKind::kInitial ? "initial" : "fallback"},
          {"raw_completion", a.raw_completion},
          {"sql", a.sql ? json(*a.sql) : json(nullptr)},
          {"status", std::string(to_string(a.status))},
          {"error", a.error}};
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
  };
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
}

}  // namespace

void RunConfig::validate() const {
  require(k >= 1, "k must be at least 1");
  require(in_unit_interval(relevance.tau), "tau must lie in [0, 1]");
  require(in_unit_interval(theta), "theta must lie in [0, 1]");
  require(in_unit_interval(relevance.alpha), "alpha must lie in [0, 1]");
  require(relevance.beta >= 0.0, "beta must be >= 0");
  require(backend == "reference" || backend == "sidecar", "backend must be 'reference' or 'sidecar'");
  require(llm == "mock" || llm == "replay" || llm == "http", "llm must be 'mock', 'replay' or 'http'");
  require(llm != "replay" || !cassette.empty(), "--llm replay needs --cassette");
  require(workers >= 1, "workers must be at least 1");
  require(encoder_dimension >= 1, "encoder dimension must be positive");
}

json to_json(const RunConfig& c) {
  return {{"tables", c.tables.string()},
          {"train", c.train.string()},
          {"dev", c.dev.string()},
          {"db_dir", c.db_dir.string()},
          {"index", c.index.string()},
          {"cassette", c.cassette.string()},
          {"k", c.k},
          {"alpha", c.relevance.alpha},
          {"beta", c.relevance.beta},
          {"tau", c.relevance.tau},
          {"theta", c.theta},
          {"max_fallbacks", c.max_fallbacks},
          {"backend", c.backend},
          {"llm", c.llm},
          {"model", c.model},
          {"exclude_same_db", c.exclude_same_db},
          {"seed", c.seed},
          {"workers", c.workers}};
}

Corpus Corpus::load(const RunConfig& config) {
  Corpus corpus;
  corpus.schemas = load_schemas(config.tables, config.db_dir);
  for (const auto& schema : corpus.schemas) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(schema.db_path, ec)) {
      corpus.values.load(schema, config.value_cap);
    } else {
      spdlog::warn("no database file for '{}'; value matching disabled for it", schema.db_id);
    }
  }
  if (!config.train.empty()) corpus.train = load_examples(config.train, corpus.schemas);
  return corpus;
}

json to_json(const QuestionRecord& r) {
  json retrieved = json::array();
  for (const auto& n : r.retrieved) retrieved.push_back({{"id", n.example_id}, {"similarity", n.similarity}});
  json attempts = json::array();
  for (const auto& a : r.outcome.attempts) attempts.push_back(attempt_json(a));
  return {{"index", r.index},
          {"question", r.question},
          {"db_id", r.db_id},
          {"gold_sql", r.gold_sql},
          {"skeleton", r.skeleton},
          {"retrieved", std::move(retrieved)},
          {"kept_schema", r.kept_schema},
          {"final_sql", r.outcome.final_sql ? json(*r.outcome.final_sql) : json(nullptr)},
          {"attempts", std::move(attempts)},
          {"attempts_count", r.outcome.attempts_count()},
          {"fallback_used", r.outcome.fallback_used},
          {"va", r.va},
          {"ex", r.ex},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

json EvalReport::summary() const {
  return {{"questions", records.size()},
          {"va_rate", va_rate},
          {"ex_rate", ex_rate},
          {"config", config},
          {"wall_seconds", wall_seconds}};
}

SkeletonIndex build_index(const RunConfig& config, const Corpus& corpus, const EncoderBackend& backend) {
  SkeletonIndex index;
  std::vector<std::optional<IndexEntry>> entries(corpus.train.size());
  std::atomic<std::size_t> done{0};

  parallel_for(corpus.train.size(), config.workers, [&](std::size_t i) {
    const auto& ex = corpus.train[i];
    const auto& schema = find_schema(corpus.schemas, ex.db_id);
    const auto result = desemanticize(ex, schema, corpus.values, backend, config.relevance);
    const auto text = result.skeleton.text();
    entries[i] = make_entry(i, backend.sentence_embed(text), text);
    const auto n = ++done;
    if (n % 500 == 0) spdlog::info("indexed {}/{} training skeletons", n, corpus.train.size());
  });

  for (auto& e : entries) index.add(std::move(*e));
  spdlog::info("skeleton index holds {} entries of dimension {}", index.size(), index.dimension());
  if (!config.index.empty()) index.save(config.index);
  return index;
}

SkeletonIndex build_index(const RunConfig& config, const EncoderBackend& backend) {
  config.validate();
  require(!config.train.empty(), "--train is required");
  return build_index(config, Corpus::load(config), backend);
}

QuestionRecord evaluate_question(const RunConfig& config, const Corpus& corpus, const SkeletonIndex& index,
                                 const EncoderBackend& backend, LlmClient& llm, const Example& question,
                                 std::size_t position) {
  QuestionRecord record;
  record.index = position;
  record.question = question.question_text;
  record.db_id = question.db_id;
  record.gold_sql = question.gold_sql;
  try {
    const auto& schema = find_schema(corpus.schemas, question.db_id);
    const auto relevance = desemanticize(question, schema, corpus.values, backend, config.relevance);
    record.skeleton = relevance.skeleton.text();

    if (!config.dump_relevance.empty()) {
      std::ofstream dump(config.dump_relevance / (std::to_string(position) + ".json"));
      dump << to_json(relevance).dump(2) << '\n';
    }

    const auto query = backend.sentence_embed(record.skeleton);
    if (config.exclude_same_db) {
      record.retrieved = index.search_knn(query, config.k, [&](std::uint64_t id) {
        return id < corpus.train.size() && corpus.train[id].db_id != question.db_id;
      });
    } else {
      record.retrieved = index.search_knn(query, config.k);
    }

    std::vector<DemonstrationExample> demos;
    for (const auto& n : record.retrieved) {
      if (n.example_id >= corpus.train.size()) {
        throw Error(ErrorCode::kCorruptIndex, "index refers to training example " + std::to_string(n.example_id) +
                                                  " but the split has " + std::to_string(corpus.train.size()));
      }
      const auto& ex = corpus.train[n.example_id];
      demos.push_back({n.example_id, ex.question_text, {}, ex.gold_sql, ex.db_id, n.similarity});
    }

    const auto filtered = filter_schema(schema, relevance.bundle.item_scores, config.theta, corpus.values);
    record.kept_schema = filtered.kept;
    const auto prompt = build_prompt(demos, filtered, question, config.prompt_token_cap);

    CompletionParams params;
    params.model = config.model;
    const GenerationContext ctx{schema, corpus.values, question, prompt, llm, params, config.query_timeout};
    record.outcome = generate_with_fallback(ctx, config.max_fallbacks);

    record.va = record.outcome.final_sql.has_value();
    if (record.va) {
      const auto gold = execute_sql(schema, question.gold_sql, config.query_timeout);
      if (!gold.ok()) {
        record.error = "gold SQL failed: " + gold.error;
      } else {
        record.ex = exec_match(*record.outcome.final_result, gold, has_top_level_order_by(question.gold_sql));
      }
    }
  } catch (const std::exception& e) {
    record.error = e.what();
    record.va = record.outcome.final_sql.has_value();
    record.ex = false;
  }
  return record;
}

EvalReport evaluate(const RunConfig& config, const Corpus& corpus, const SkeletonIndex& index,
                    const EncoderBackend& backend, LlmClient& llm) {
  const auto start = std::chrono::steady_clock::now();
  const auto dev = load_examples(config.dev, corpus.schemas);
  if (!config.dump_relevance.empty()) std::filesystem::create_directories(config.dump_relevance);

  EvalReport report;
  report.config = to_json(config);
  report.records.resize(dev.size());
  std::atomic<std::size_t> done{0};
  parallel_for(dev.size(), config.workers, [&](std::size_t i) {
    report.records[i] = evaluate_question(config, corpus, index, backend, llm, dev[i], i);
    const auto n = ++done;
    if (n % 100 == 0) spdlog::info("evaluated {}/{} questions", n, dev.size());
  });

  std::size_t va = 0;
  std::size_t ex = 0;
  for (const auto& r : report.records) {
    va += r.va;
    ex += r.ex;
  }
  if (!report.records.empty()) {
    report.va_rate = static_cast<double>(va) / static_cast<double>(report.records.size());
    report.ex_rate = static_cast<double>(ex) / static_cast<double>(report.records.size());
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("VA {:.4f}  EX {:.4f} over {} questions", report.va_rate, report.ex_rate, report.records.size());

  if (!config.out.empty()) write_report(report, config.out);
  return report;
}

EvalReport evaluate(const RunConfig& config, const EncoderBackend& backend, LlmClient& llm) {
  config.validate();
  require(!config.dev.empty(), "--dev is required");
  require(!config.index.empty(), "--index is required");
  require(!config.train.empty(), "--train is required to resolve retrieved demonstrations");
  const Corpus corpus = Corpus::load(config);
  const SkeletonIndex index = SkeletonIndex::load(config.index);
  return evaluate(config, corpus, index, backend, llm);
}

std::map<std::string, std::vector<std::string>> gold_script(std::span<const Example> examples,
                                                             std::size_t failures_first) {
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& ex : examples) {
    auto& queue = script[ex.question_text];
    for (std::size_t i = 0; i < failures_first; ++i) queue.emplace_back("SELEC");
    queue.push_back(ex.gold_sql);
  }
  return script;
}

std::filesystem::path summary_path(const std::filesystem::path& report) {
  auto p = report;
  p.replace_extension(".summary.json");
  return p;
}

void write_report(const EvalReport& report, const std::filesystem::path& jsonl_path) {
  if (jsonl_path.has_parent_path()) std::filesystem::create_directories(jsonl_path.parent_path());
  std::ofstream out(jsonl_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write report '" + jsonl_path.string() + "'");
  for (const auto& r : report.records) out << to_json(r).dump() << '\n';

  std::ofstream summary(summary_path(jsonl_path), std::ios::trunc);
  if (!summary) throw Error(ErrorCode::kIoError, "cannot write summary next to '" + jsonl_path.string() + "'");
  summary << report.summary().dump(2) << '\n';
  if (!out || !summary) throw Error(ErrorCode::kIoError, "report write failed");
}

}  // namespace skelsql
