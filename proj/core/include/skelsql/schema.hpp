#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace skelsql {

using ItemId = std::size_t;

enum class ItemKind { kTable, kColumn };
enum class ColumnType { kText, kNumber, kTime, kBoolean, kOther };

std::string_view to_string(ColumnType type) noexcept;
ColumnType parse_column_type(std::string_view spider_type) noexcept;

/// One entry of the linearized schema sequence: every table first, then the
/// columns of each table in file order. The id is the position in that sequence
/// and indexes the columns of every relevance matrix.
struct SchemaItem {
  ItemId id = 0;
  ItemKind kind = ItemKind::kTable;
  std::string name;           // lowercase, underscores as spaces
  std::string original_name;  // as written in tables.json
  std::optional<ItemId> parent_table;
  std::optional<ColumnType> column_type;
  bool is_primary_key = false;
  std::optional<ItemId> foreign_key_to;

  bool is_table() const noexcept { return kind == ItemKind::kTable; }
  bool is_column() const noexcept { return kind == ItemKind::kColumn; }

  friend bool operator==(const SchemaItem&, const SchemaItem&) = default;
};

struct DatabaseSchema {
  std::string db_id;
  std::vector<SchemaItem> items;
  std::filesystem::path db_path;

  std::size_t table_count() const noexcept;
  std::size_t column_count() const noexcept;

  const SchemaItem& item(ItemId id) const { return items.at(id); }
  std::vector<ItemId> tables() const;
  std::vector<ItemId> columns_of(ItemId table) const;

  /// Linearized display names, the schema half of an encoder request.
  std::vector<std::string> item_names() const;

  friend bool operator==(const DatabaseSchema&, const DatabaseSchema&) = default;
};

struct Example {
  std::string question_text;
  std::vector<std::string> question_tokens;
  std::string gold_sql;
  std::string db_id;
};

nlohmann::json to_json(const DatabaseSchema& schema);

/// Distinct lowercase cell values per (db_id, column id).
class ValueStore {
 public:
  static constexpr std::size_t kDefaultCap = 1000;

  /// Scans every column of `schema` from its SQLite file.
  void load(const DatabaseSchema& schema, std::size_t cap = kDefaultCap);

  /// Replaces the values of one column; the column must exist in `schema`.
  void set(const DatabaseSchema& schema, ItemId column, std::set<std::string> values);

  /// Empty set for columns that were never loaded.
  const std::set<std::string>& values(const std::string& db_id, ItemId column) const;

  bool contains(const std::string& db_id, ItemId column, const std::string& value) const;

  std::size_t column_count() const noexcept { return values_.size(); }

 private:
  std::map<std::pair<std::string, ItemId>, std::set<std::string>> values_;
};

}  // namespace skelsql
