#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <sqlite3.h>

#include "skelsql/error.hpp"

namespace skelsql::detail {

struct SqliteCloser {
  void operator()(sqlite3* db) const noexcept { sqlite3_close_v2(db); }
};
struct StatementFinalizer {
  void operator()(sqlite3_stmt* stmt) const noexcept { sqlite3_finalize(stmt); }
};

using SqliteDb = std::unique_ptr<sqlite3, SqliteCloser>;
using SqliteStatement = std::unique_ptr<sqlite3_stmt, StatementFinalizer>;

// Read-only connection; the file must already exist.
inline SqliteDb open_read_only(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.empty() || !std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kDbUnreadable, "no database file at '" + path.string() + "'");
  }
  sqlite3* raw = nullptr;
  const std::string uri = "file:" + path.string() + "?mode=ro";
  const int rc = sqlite3_open_v2(uri.c_str(), &raw, SQLITE_OPEN_READONLY | SQLITE_OPEN_URI, nullptr);
  SqliteDb db(raw);
  if (rc != SQLITE_OK) {
    const std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
    throw Error(ErrorCode::kDbUnreadable, path.string() + ": " + msg);
  }
  return db;
}

inline std::string quote_identifier(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace skelsql::detail
