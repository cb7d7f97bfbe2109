#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "fixtures.hpp"
#include "skelsql/error.hpp"
#include "skelsql/executor.hpp"

namespace skelsql {
namespace {

const DatabaseSchema& concert() { return testing::mini_spider_schema("concert_singer"); }

// Independent count of singer rows: tuples in the seed script's INSERT.
std::size_t seeded_singers() {
  std::ifstream in(testing::fixture_dir() / "database" / "concert_singer" / "concert_singer.sql");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string script = ss.str();
  const auto begin = script.find("INSERT INTO singer VALUES");
  const auto end = script.find(";", begin);
  const std::string block = script.substr(begin, end - begin);
  const std::regex row(R"(\n\s*\(\d+,)");
  return static_cast<std::size_t>(std::distance(std::sregex_iterator(block.begin(), block.end(), row),
                                                std::sregex_iterator()));
}

TEST(ExecuteSql, CountsSeededRows) {
  ASSERT_EQ(seeded_singers(), 6u);
  const auto r = execute_sql(concert(), "SELECT count(*) FROM singer");
  ASSERT_TRUE(r.ok()) << r.error;
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0], (Row{Cell::of_number(static_cast<double>(seeded_singers()))}));
  EXPECT_EQ(r.raw_rows[0][0], "6");
}

TEST(ExecuteSql, Errors) {
  const auto bad = execute_sql(concert(), "SELEC *");
  EXPECT_EQ(bad.status, ExecStatus::kSqlError);
  EXPECT_FALSE(bad.error.empty());
  EXPECT_EQ(execute_sql(concert(), "DROP TABLE singer").status, ExecStatus::kSqlError);
  EXPECT_EQ(execute_sql(concert(), "SELECT 1; DELETE FROM singer").status, ExecStatus::kSqlError);
  EXPECT_EQ(execute_sql(concert(), "  ").status, ExecStatus::kSqlError);
  EXPECT_EQ(execute_sql(concert(), "SELECT count(*) FROM singer").rows[0][0].number, 6.0);  // still intact
  EXPECT_TRUE(execute_sql(concert(), "SELECT 1; -- trailing comment").ok());
}

TEST(ExecuteSql, Timeout) {
  const auto r = execute_sql(concert(),
                             "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT max(x) FROM c",
                             std::chrono::milliseconds(50));
  EXPECT_EQ(r.status, ExecStatus::kTimeout);
}

TEST(ExecuteSql, MissingDatabase) {
  auto schema = concert();
  schema.db_path = "/nonexistent/x.sqlite";
  try {
    execute_sql(schema, "SELECT 1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDbUnreadable);
  }
}

TEST(Cells, NormalizedComparison) {
  EXPECT_EQ(Cell::of_number(3), Cell::of_number(3.0000000001));
  EXPECT_EQ(Cell::of_number(-0.0), Cell::of_number(0.0));
  EXPECT_EQ(Cell::of_text("France"), Cell::of_text("france"));
  EXPECT_NE(Cell::of_text("1"), Cell::of_number(1));
}

ExecutionResult rows_of(std::vector<Row> rows) {
  ExecutionResult r;
  r.rows = std::move(rows);
  return r;
}

TEST(ExecMatch, OrderRules) {
  const auto a = rows_of({{Cell::of_number(1)}, {Cell::of_number(2)}});
  const auto b = rows_of({{Cell::of_number(2)}, {Cell::of_number(1)}});
  EXPECT_TRUE(exec_match(a, a, true));
  EXPECT_TRUE(exec_match(a, b, false));
  EXPECT_FALSE(exec_match(a, b, true));
  EXPECT_FALSE(exec_match(a, rows_of({{Cell::of_number(1)}}), false));
  // Multiset, not set.
  EXPECT_FALSE(exec_match(rows_of({{Cell::of_number(1)}, {Cell::of_number(1)}}), a, false));
  ExecutionResult failed;
  failed.status = ExecStatus::kSqlError;
  EXPECT_THROW(exec_match(failed, a, false), Error);
}

TEST(ExecMatch, RealQueries) {
  const auto gold = execute_sql(concert(), "SELECT Name FROM singer ORDER BY Age DESC");
  const auto same = execute_sql(concert(), "select name from singer order by age desc");
  const auto unordered = execute_sql(concert(), "SELECT Name FROM singer");
  EXPECT_TRUE(exec_match(same, gold, true));
  EXPECT_FALSE(exec_match(unordered, gold, true));
  EXPECT_TRUE(exec_match(unordered, gold, false));
}

TEST(OrderBy, TopLevelOnly) {
  EXPECT_TRUE(has_top_level_order_by("SELECT a FROM t ORDER BY a"));
  EXPECT_TRUE(has_top_level_order_by("select a from t order\n  by a desc"));
  EXPECT_FALSE(has_top_level_order_by("SELECT a FROM (SELECT a FROM t ORDER BY a)"));
  EXPECT_FALSE(has_top_level_order_by("SELECT 'order by' FROM t"));
  EXPECT_FALSE(has_top_level_order_by("SELECT border, bye FROM t"));
}

struct Harness {
  Example question = testing::make_example("How many singers do we have?", "concert_singer");
  Prompt prompt;
  Harness() {
    prompt.text = "-- Question: How many singers do we have?\n-- SQL:\n";
    prompt.question_text = question.question_text;
  }
  GenerationOutcome run(LlmClient& llm, std::size_t max_fallbacks = 3) {
    const GenerationContext ctx{concert(), testing::mini_spider_values(), question, prompt, llm, {}, {}};
    return generate_with_fallback(ctx, max_fallbacks);
  }
};

TEST(Fallback, InvalidThenValid) {
  Harness h;
  MockLlm llm(std::vector<std::string>{"SELEC *", "SELECT count(*) FROM singer;"});
  const auto out = h.run(llm);
  EXPECT_EQ(out.attempts_count(), 2u);
  EXPECT_TRUE(out.fallback_used);
  ASSERT_TRUE(out.final_sql.has_value());
  EXPECT_EQ(*out.final_sql, "SELECT count(*) FROM singer");
  EXPECT_EQ(out.attempts[0].status, AttemptStatus::kExtractionFailed);
  EXPECT_EQ(out.attempts[1].kind, PromptKind::kFallback);
  EXPECT_EQ(out.attempts.back().status, AttemptStatus::kOk);
}

TEST(Fallback, FirstTimeRight) {
  Harness h;
  MockLlm llm(std::vector<std::string>{"SELECT count(*) FROM singer"});
  const auto out = h.run(llm);
  EXPECT_EQ(out.attempts_count(), 1u);
  EXPECT_FALSE(out.fallback_used);
  EXPECT_TRUE(out.final_result->ok());
}

TEST(Fallback, BoundEnforced) {
  Harness h;
  MockLlm llm(std::vector<std::string>{"SELECT nope FROM singer", "SELECT nope FROM singer", "SELEC", "SELECT x FROM y", "SELECT 1"});
  const auto out = h.run(llm, 3);
  EXPECT_EQ(out.attempts_count(), 4u);
  EXPECT_FALSE(out.final_sql.has_value());
  EXPECT_EQ(llm.calls(), 4u);
  EXPECT_EQ(out.attempts[0].status, AttemptStatus::kSqlError);
  EXPECT_NE(out.attempts[0].error.find("nope"), std::string::npos);
}

TEST(Fallback, ZeroFallbacks) {
  Harness h;
  MockLlm llm(std::vector<std::string>{"SELEC", "SELECT 1"});
  const auto out = h.run(llm, 0);
  EXPECT_EQ(out.attempts_count(), 1u);
  EXPECT_FALSE(out.fallback_used);
  EXPECT_FALSE(out.final_sql.has_value());
}

// Captures the prompts it is given.
class RecordingLlm : public LlmClient {
 public:
  explicit RecordingLlm(std::vector<std::string> script) : mock_(std::move(script)) {}
  CompletionResult complete(const Prompt& p, const CompletionParams& params) override {
    prompts.push_back(p);
    return mock_.complete(p, params);
  }
  std::vector<Prompt> prompts;

 private:
  MockLlm mock_;
};

TEST(Fallback, PromptCarriesFailure) {
  Harness h;
  RecordingLlm llm({"SELECT nope FROM singer", "SELECT count(*) FROM singer"});
  h.run(llm);
  ASSERT_EQ(llm.prompts.size(), 2u);
  EXPECT_EQ(llm.prompts[0].kind, PromptKind::kInitial);
  EXPECT_EQ(llm.prompts[1].kind, PromptKind::kFallback);
  EXPECT_NE(llm.prompts[1].text.find("SELECT nope FROM singer"), std::string::npos);
  EXPECT_NE(llm.prompts[1].text.find("no such column"), std::string::npos);
}

TEST(Fallback, LlmErrorsAreAttempts) {
  Harness h;
  MockLlm llm(std::vector<std::string>{});
  const auto out = h.run(llm, 1);
  EXPECT_EQ(out.attempts_count(), 2u);
  EXPECT_EQ(out.attempts[0].status, AttemptStatus::kLlmError);
  EXPECT_FALSE(out.final_sql.has_value());
}

}  // namespace
}  // namespace skelsql
