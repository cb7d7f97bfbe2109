#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "skelsql/error.hpp"
#include "skelsql/harness.hpp"
#include "skelsql/network.hpp"
#include "skelsql/spider.hpp"

namespace skelsql {
namespace {

using nlohmann::json;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Example> dev_split() {
  return load_examples(testing::fixture_dir() / "dev.json", testing::mini_spider_schemas());
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no skelsql::Error thrown";
  return ErrorCode::kIoError;
}

void expect_report_invariants(const EvalReport& report) {
  std::size_t va = 0, ex = 0;
  for (const auto& r : report.records) {
    EXPECT_TRUE(!r.ex || r.va) << r.question;
    va += r.va;
    ex += r.ex;
  }
  const double n = static_cast<double>(report.records.size());
  EXPECT_EQ(report.va_rate, report.records.empty() ? 0.0 : va / n);
  EXPECT_EQ(report.ex_rate, report.records.empty() ? 0.0 : ex / n);
}

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = testing::mini_spider_config(dir_.path());
    build_index(config_, encoder_);
  }
  testing::TempDir dir_;
  RunConfig config_;
  ReferenceEncoder encoder_;
};

TEST(BuildIndex, ToySplitSizeAndDeterminism) {
  testing::TempDir dir;
  auto config = testing::mini_spider_config(dir.path());
  auto train = json::parse(slurp(config.train));
  train.erase(train.begin() + 10, train.end());
  config.train = dir / "train10.json";
  std::ofstream(config.train) << train.dump();

  const ReferenceEncoder enc;
  const auto index = build_index(config, enc);
  EXPECT_EQ(index.size(), 10u);
  const auto first = slurp(config.index);

  config.workers = 1;
  build_index(config, enc);
  EXPECT_EQ(slurp(config.index), first);
  EXPECT_EQ(SkeletonIndex::load(config.index).entry(0).skeleton_text, index.entry(0).skeleton_text);
}

TEST(BuildIndex, MissingTrainFile) {
  testing::TempDir dir;
  auto config = testing::mini_spider_config(dir.path());
  config.train = dir / "nope.json";
  EXPECT_EQ(code_of([&] { build_index(config, ReferenceEncoder()); }), ErrorCode::kFileMissing);
}

TEST(RunConfigTest, Validation) {
  RunConfig ok;
  ok.validate();
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return code_of([&] { c.validate(); });
  };
  EXPECT_EQ(bad([](RunConfig& c) { c.k = 0; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.relevance.tau = 1.5; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.theta = -0.1; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.relevance.alpha = 2; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.relevance.beta = -1; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.backend = "bert"; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.llm = "replay"; }), ErrorCode::kConfigError);
  EXPECT_EQ(bad([](RunConfig& c) { c.workers = 0; }), ErrorCode::kConfigError);
  const auto echo = to_json(ok);
  EXPECT_EQ(echo["k"], 8);
  EXPECT_EQ(echo["alpha"], 0.9);
  EXPECT_EQ(echo["beta"], 0.5);
  EXPECT_EQ(echo["tau"], 0.6);
  EXPECT_EQ(echo["theta"], 0.4);
}

TEST_F(HarnessTest, GoldMockScoresPerfectly) {
  MockLlm llm(gold_script(dev_split()));
  const auto before = network_request_count();
  const auto report = evaluate(config_, encoder_, llm);
  EXPECT_EQ(network_request_count(), before);
  ASSERT_EQ(report.records.size(), 20u);
  EXPECT_EQ(report.va_rate, 1.0);
  EXPECT_EQ(report.ex_rate, 1.0);
  expect_report_invariants(report);
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    EXPECT_EQ(report.records[i].index, i);
    EXPECT_FALSE(report.records[i].error.has_value()) << *report.records[i].error;
    EXPECT_EQ(report.records[i].retrieved.size(), 8u);
  }
  EXPECT_EQ(report.records[0].skeleton, "what are the [MASK] of the [MASK] who are not [MASK] ?");
}

TEST_F(HarnessTest, AlwaysInvalidWithoutFallback) {
  config_.max_fallbacks = 0;
  MockLlm llm(gold_script(dev_split(), 1));  // every question answers "SELEC" first
  const auto report = evaluate(config_, encoder_, llm);
  EXPECT_EQ(report.va_rate, 0.0);
  EXPECT_EQ(report.ex_rate, 0.0);
  for (const auto& r : report.records) EXPECT_EQ(r.outcome.attempts_count(), 1u);
  expect_report_invariants(report);
}

TEST_F(HarnessTest, NineOfTen) {
  auto dev = json::parse(slurp(config_.dev));
  dev.erase(dev.begin() + 10, dev.end());
  config_.dev = dir_ / "dev10.json";
  std::ofstream(config_.dev) << dev.dump();
  config_.max_fallbacks = 0;

  const auto examples = load_examples(config_.dev, testing::mini_spider_schemas());
  auto script = gold_script(examples);
  script[examples[4].question_text] = {"SELECT nope FROM nowhere"};
  MockLlm llm(script);
  const auto report = evaluate(config_, encoder_, llm);
  EXPECT_DOUBLE_EQ(report.va_rate, 0.9);
  EXPECT_FALSE(report.records[4].va);
  expect_report_invariants(report);
}

TEST_F(HarnessTest, WrongButValidSqlIsVaNotEx) {
  const auto dev = dev_split();
  auto script = gold_script(dev);
  script[dev[1].question_text] = {"SELECT count(*) FROM singer"};  // 6, gold counts stadiums (5)
  MockLlm llm(script);
  const auto report = evaluate(config_, encoder_, llm);
  EXPECT_TRUE(report.records[1].va);
  EXPECT_FALSE(report.records[1].ex);
  EXPECT_DOUBLE_EQ(report.ex_rate, 19.0 / 20.0);
  expect_report_invariants(report);
}

TEST_F(HarnessTest, ExcludeSameDb) {
  config_.exclude_same_db = true;
  const auto train = load_examples(config_.train, testing::mini_spider_schemas());
  MockLlm llm(gold_script(dev_split()));
  const auto report = evaluate(config_, encoder_, llm);
  for (const auto& r : report.records) {
    EXPECT_FALSE(r.retrieved.empty());
    for (const auto& n : r.retrieved) EXPECT_NE(train[n.example_id].db_id, r.db_id);
  }
  EXPECT_EQ(report.ex_rate, 1.0);
}

TEST_F(HarnessTest, ReportsAreDeterministicAndWritten) {
  config_.dump_relevance = dir_ / "relevance";
  MockLlm first_llm(gold_script(dev_split(), 1));
  const auto first = evaluate(config_, encoder_, first_llm);
  const auto first_jsonl = slurp(config_.out);

  config_.workers = 1;
  MockLlm second_llm(gold_script(dev_split(), 1));
  const auto second = evaluate(config_, encoder_, second_llm);
  EXPECT_EQ(slurp(config_.out), first_jsonl);

  std::istringstream lines(first_jsonl);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto record = json::parse(line);
    EXPECT_EQ(record["index"], n);
    EXPECT_EQ(record["attempts_count"], 2);
    EXPECT_EQ(record["fallback_used"], true);
  }
  EXPECT_EQ(n, 20u);

  const auto summary = json::parse(slurp(summary_path(config_.out)));
  EXPECT_EQ(summary["questions"], 20);
  EXPECT_EQ(summary["va_rate"], 1.0);
  EXPECT_TRUE(summary.contains("wall_seconds"));
  EXPECT_EQ(summary["config"]["workers"], 1);  // the second run wrote last
  EXPECT_EQ(summary_path("out/report.jsonl"), std::filesystem::path("out/report.summary.json"));

  const auto dump = json::parse(slurp(config_.dump_relevance / "0.json"));
  EXPECT_EQ(dump["skeleton"], first.records[0].skeleton);
}

TEST_F(HarnessTest, QuestionFailuresDoNotAbort) {
  auto dev = json::parse(slurp(config_.dev));
  // A database without a SQLite file: the question fails, the run goes on.
  auto tables = json::parse(slurp(config_.tables));
  tables[0]["db_id"] = "ghost";
  tables.push_back(json::parse(slurp(config_.tables))[0]);
  config_.tables = dir_ / "tables.json";
  std::ofstream(config_.tables) << tables.dump();
  dev.push_back({{"db_id", "ghost"}, {"question", "How many singers are there?"}, {"query", "SELECT 1"}});
  config_.dev = dir_ / "dev.json";
  std::ofstream(config_.dev) << dev.dump();

  auto script = gold_script(load_examples(config_.dev, load_schemas(config_.tables, config_.db_dir)));
  MockLlm llm(script);
  const auto report = evaluate(config_, encoder_, llm);
  ASSERT_EQ(report.records.size(), 21u);
  ASSERT_TRUE(report.records[20].error.has_value());
  EXPECT_NE(report.records[20].error->find("ghost"), std::string::npos) << *report.records[20].error;
  EXPECT_FALSE(report.records[20].va);
  EXPECT_DOUBLE_EQ(report.va_rate, 20.0 / 21.0);
  expect_report_invariants(report);
}

}  // namespace
}  // namespace skelsql
