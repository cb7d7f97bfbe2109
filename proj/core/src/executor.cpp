#include "skelsql/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <tuple>

#include "skelsql/error.hpp"
#include "skelsql/llm.hpp"
#include "sqlite_handle.hpp"

namespace skelsql {
namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
  Clock::time_point at;
  bool expired = false;
};

int progress_callback(void* data) {
  auto* deadline = static_cast<Deadline*>(data);
  if (Clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;
  }
  return 0;
}

bool only_trailing_noise(const char* tail) {
  // Whitespace, semicolons and comments may follow the statement.
  std::string_view rest = tail ? tail : "";
  std::size_t i = 0;
  while (i < rest.size()) {
    const char c = rest[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ';') {
      ++i;
    } else if (rest.substr(i).starts_with("--")) {
      const auto nl = rest.find('\n', i);
      i = nl == std::string_view::npos ? rest.size() : nl + 1;
    } else if (rest.substr(i).starts_with("/*")) {
      const auto close = rest.find("*/", i + 2);
      i = close == std::string_view::npos ? rest.size() : close + 2;
    } else {
      return false;
    }
  }
  return true;
}

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(15);
  out << v;
  return out.str();
}

ExecutionResult failure(ExecStatus status, std::string message) {
  ExecutionResult r;
  r.status = status;
  r.error = std::move(message);
  return r;
}

}  // namespace

Cell Cell::of_number(double value) {
  Cell c;
  c.kind = Kind::kNumber;
  double rounded = std::round(value * 1e6) / 1e6;
  if (rounded == 0.0) rounded = 0.0;  // fold -0
  c.number = rounded;
  return c;
}

Cell Cell::of_text(std::string_view value) {
  Cell c;
  c.kind = Kind::kText;
  c.text.reserve(value.size());
  for (unsigned char ch : value) c.text += static_cast<char>(std::tolower(ch));
  return c;
}

bool operator<(const Cell& a, const Cell& b) {
  return std::tie(a.kind, a.number, a.text) < std::tie(b.kind, b.number, b.text);
}

std::string_view to_string(ExecStatus status) noexcept {
  switch (status) {
    case ExecStatus::kOk: return "ok";
    case ExecStatus::kSqlError: return "sql_error";
    case ExecStatus::kTimeout: return "timeout";
  }
  return "sql_error";
}

std::string_view to_string(AttemptStatus status) noexcept {
  switch (status) {
    case AttemptStatus::kOk: return "ok";
    case AttemptStatus::kSqlError: return "sql_error";
    case AttemptStatus::kTimeout: return "timeout";
    case AttemptStatus::kExtractionFailed: return "extraction_failed";
    case AttemptStatus::kLlmError: return "llm_error";
  }
  return "llm_error";
}

ExecutionResult execute_sql(const DatabaseSchema& db, std::string_view sql, std::chrono::milliseconds timeout) {
  auto conn = detail::open_read_only(db.db_path);
  Deadline deadline{Clock::now() + timeout};
  sqlite3_progress_handler(conn.get(), 1000, progress_callback, &deadline);

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  const std::string text(sql);
  if (sqlite3_prepare_v2(conn.get(), text.c_str(), static_cast<int>(text.size()), &raw, &tail) != SQLITE_OK) {
    if (deadline.expired) return failure(ExecStatus::kTimeout, "query timed out while compiling");
    return failure(ExecStatus::kSqlError, sqlite3_errmsg(conn.get()));
  }
  detail::SqliteStatement stmt(raw);
  if (!stmt) return failure(ExecStatus::kSqlError, "empty statement");
  if (!only_trailing_noise(tail)) return failure(ExecStatus::kSqlError, "only a single statement may be executed");
  if (!sqlite3_stmt_readonly(stmt.get())) {
    return failure(ExecStatus::kSqlError, "write statements are not permitted");
  }

  ExecutionResult result;
  const int columns = sqlite3_column_count(stmt.get());
  int rc = SQLITE_ROW;
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    Row row;
    std::vector<std::string> raw_row;
    row.reserve(static_cast<std::size_t>(columns));
    for (int c = 0; c < columns; ++c) {
      switch (sqlite3_column_type(stmt.get(), c)) {
        case SQLITE_INTEGER: {
          const auto v = sqlite3_column_int64(stmt.get(), c);
          row.push_back(Cell::of_number(static_cast<double>(v)));
          raw_row.push_back(std::to_string(v));
          break;
        }
        case SQLITE_FLOAT: {
          const double v = sqlite3_column_double(stmt.get(), c);
          row.push_back(Cell::of_number(v));
          raw_row.push_back(format_real(v));
          break;
        }
        case SQLITE_TEXT: {
          const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), c));
          const std::string_view v(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c)));
          row.push_back(Cell::of_text(v));
          raw_row.emplace_back(v);
          break;
        }
        case SQLITE_BLOB: {
          const auto* p = static_cast<const char*>(sqlite3_column_blob(stmt.get(), c));
          Cell cell;
          cell.kind = Cell::Kind::kBlob;
          cell.text.assign(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c)));
          raw_row.push_back(cell.text);
          row.push_back(std::move(cell));
          break;
        }
        default:
          row.push_back(Cell::null());
          raw_row.emplace_back("NULL");
      }
    }
    result.rows.push_back(std::move(row));
    result.raw_rows.push_back(std::move(raw_row));
  }
  if (rc != SQLITE_DONE) {
    if (deadline.expired) return failure(ExecStatus::kTimeout, "query exceeded " + std::to_string(timeout.count()) + " ms");
    return failure(ExecStatus::kSqlError, sqlite3_errmsg(conn.get()));
  }
  return result;
}

bool has_top_level_order_by(std::string_view sql) {
  int depth = 0;
  char quote = 0;
  std::string word;
  std::string previous;
  auto flush = [&]() -> bool {
    if (word.empty()) return false;
    const bool hit = depth == 0 && previous == "order" && word == "by";
    previous = std::move(word);
    word.clear();
    return hit;
  };
  for (char c : sql) {
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      continue;
    }
    if (flush()) return true;
    if (c == '\'' || c == '"' || c == '`') {
      quote = c;
      previous.clear();
    } else if (c == '(') {
      ++depth;
      previous.clear();
    } else if (c == ')') {
      --depth;
      previous.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      previous.clear();
    }
  }
  return flush();
}

bool exec_match(const ExecutionResult& pred, const ExecutionResult& gold, bool order_sensitive) {
  if (!pred.ok() || !gold.ok()) throw Error(ErrorCode::kNotExecutable, "both results must have executed");
  if (pred.rows.size() != gold.rows.size()) return false;
  if (order_sensitive) return pred.rows == gold.rows;
  auto a = pred.rows;
  auto b = gold.rows;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

GenerationOutcome generate_with_fallback(const GenerationContext& ctx, std::size_t max_fallbacks) {
  GenerationOutcome outcome;
  Prompt prompt = ctx.initial_prompt;

  for (std::size_t attempt_no = 0; attempt_no <= max_fallbacks; ++attempt_no) {
    Attempt attempt;
    attempt.kind = prompt.kind;
    if (prompt.kind == PromptKind::kFallback) outcome.fallback_used = true;

    std::string failed_sql;
    bool completed = true;
    try {
      attempt.raw_completion = ctx.llm.complete(prompt, ctx.params).raw_text;
    } catch (const std::exception& e) {
      completed = false;
      attempt.status = AttemptStatus::kLlmError;
      attempt.error = e.what();
    }

    if (completed) {
      attempt.sql = extract_sql(attempt.raw_completion);
      if (!attempt.sql) {
        attempt.status = AttemptStatus::kExtractionFailed;
        attempt.error = "the completion does not contain a SQL query";
        failed_sql = attempt.raw_completion;
      } else {
        // An unreadable database is not the model's fault: DbUnreadable propagates.
        auto result = execute_sql(ctx.schema, *attempt.sql, ctx.timeout);
        if (result.ok()) {
          attempt.status = AttemptStatus::kOk;
          outcome.final_sql = attempt.sql;
          outcome.final_result = std::move(result);
          outcome.attempts.push_back(std::move(attempt));
          return outcome;
        }
        attempt.status = result.status == ExecStatus::kTimeout ? AttemptStatus::kTimeout : AttemptStatus::kSqlError;
        attempt.error = result.error;
        failed_sql = *attempt.sql;
      }
    }

    const std::string error = attempt.error;
    outcome.attempts.push_back(std::move(attempt));
    prompt = build_fallback_prompt(ctx.schema, ctx.question, failed_sql, error, ctx.values);
  }
  return outcome;
}

}  // namespace skelsql
