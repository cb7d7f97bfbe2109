#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skelsql/llm.hpp"
#include "skelsql/prompt.hpp"
#include "skelsql/schema.hpp"

namespace skelsql {

/// Comparison form of a result cell: numbers rounded to 1e-6 (integers and
/// reals compare equal when they agree), text lowercased.
struct Cell {
  enum class Kind { kNull, kNumber, kText, kBlob };
  Kind kind = Kind::kNull;
  double number = 0.0;
  std::string text;

  static Cell null() { return {}; }
  static Cell of_number(double value);
  static Cell of_text(std::string_view value);

  friend bool operator==(const Cell&, const Cell&) = default;
  friend bool operator<(const Cell& a, const Cell& b);
};

using Row = std::vector<Cell>;

enum class ExecStatus { kOk, kSqlError, kTimeout };
std::string_view to_string(ExecStatus status) noexcept;

struct ExecutionResult {
  ExecStatus status = ExecStatus::kOk;
  std::vector<Row> rows;                          // normalized, only when ok
  std::vector<std::vector<std::string>> raw_rows;  // as returned, for display
  std::string error;                             // only on sql_error / timeout

  bool ok() const noexcept { return status == ExecStatus::kOk; }
};

inline constexpr std::chrono::milliseconds kDefaultQueryTimeout{30000};
inline constexpr std::size_t kDefaultMaxFallbacks = 3;

/// Runs one read-only statement on its own connection. Writes, multiple
/// statements and syntax errors are sql_error; exceeding `timeout` is timeout.
ExecutionResult execute_sql(const DatabaseSchema& db, std::string_view sql,
                            std::chrono::milliseconds timeout = kDefaultQueryTimeout);

/// True when ORDER BY appears outside any parentheses or quotes.
bool has_top_level_order_by(std::string_view sql);

/// Exact list equality when order_sensitive, multiset equality otherwise.
/// Throws NotExecutable unless both results are ok.
bool exec_match(const ExecutionResult& pred, const ExecutionResult& gold, bool order_sensitive);

enum class AttemptStatus { kOk, kSqlError, kTimeout, kExtractionFailed, kLlmError };
std::string_view to_string(AttemptStatus status) noexcept;

struct Attempt {
  PromptKind kind = PromptKind::kInitial;
  std::string raw_completion;
  std::optional<std::string> sql;  // nullopt on extraction failure
  AttemptStatus status = AttemptStatus::kOk;
  std::string error;
};

struct GenerationOutcome {
  std::optional<std::string> final_sql;
  std::optional<ExecutionResult> final_result;
  std::vector<Attempt> attempts;
  bool fallback_used = false;

  std::size_t attempts_count() const noexcept { return attempts.size(); }
};

/// What the fallback loop needs for one question.
struct GenerationContext {
  const DatabaseSchema& schema;
  const ValueStore& values;
  const Example& question;
  const Prompt& initial_prompt;
  LlmClient& llm;
  CompletionParams params;
  std::chrono::milliseconds timeout = kDefaultQueryTimeout;
};

/// Attempt 1 uses the filtered prompt. Every failure (no SQL in the
/// completion, a database error, a timeout, or an LLM error) is followed by a
/// fallback prompt carrying the complete schema and the latest failure, at
/// most `max_fallbacks` times. Stops at the first executable query. Throws
/// DbUnreadable when the database itself cannot be opened.
GenerationOutcome generate_with_fallback(const GenerationContext& ctx, std::size_t max_fallbacks = kDefaultMaxFallbacks);

}  // namespace skelsql
