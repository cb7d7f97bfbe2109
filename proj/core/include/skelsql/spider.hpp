#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skelsql/schema.hpp"

namespace skelsql {

/// Lowercases, splits on whitespace, and peels leading/trailing punctuation
/// into one token per character. No stemming.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercase, trimmed, underscores replaced by single spaces.
std::string display_name(std::string_view original);

/// Reads a Spider `tables.json`. SQLite files are expected at
/// `<db_dir>/<db_id>/<db_id>.sqlite`; `db_dir` may be empty when only the
/// schema is needed. Result is sorted by db_id.
std::vector<DatabaseSchema> load_schemas(const std::filesystem::path& tables_file,
                                         const std::filesystem::path& db_dir = {});

std::vector<DatabaseSchema> parse_schemas(const nlohmann::json& doc,
                                          const std::filesystem::path& db_dir = {});

/// Reads Spider train/dev JSON (question, query, db_id), preserving file order.
std::vector<Example> load_examples(const std::filesystem::path& file,
                                   std::span<const DatabaseSchema> schemas);

std::vector<Example> parse_examples(const nlohmann::json& doc,
                                    std::span<const DatabaseSchema> schemas);

/// At most `cap` distinct trimmed lowercase values, the first `cap` in
/// ascending order. Opens its own read-only connection.
std::set<std::string> column_values(const DatabaseSchema& db, const SchemaItem& column,
                                    std::size_t cap = ValueStore::kDefaultCap);

const DatabaseSchema& find_schema(std::span<const DatabaseSchema> schemas, std::string_view db_id);

}  // namespace skelsql
