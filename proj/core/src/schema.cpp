#include "skelsql/schema.hpp"

#include <algorithm>

#include "skelsql/error.hpp"
#include "skelsql/spider.hpp"

namespace skelsql {

std::string_view to_string(ColumnType type) noexcept {
  switch (type) {
    case ColumnType::kText: return "text";
    case ColumnType::kNumber: return "number";
    case ColumnType::kTime: return "time";
    case ColumnType::kBoolean: return "boolean";
    case ColumnType::kOther: return "others";
  }
  return "others";
}

ColumnType parse_column_type(std::string_view spider_type) noexcept {
  if (spider_type == "text") return ColumnType::kText;
  if (spider_type == "number") return ColumnType::kNumber;
  if (spider_type == "time") return ColumnType::kTime;
  if (spider_type == "boolean") return ColumnType::kBoolean;
  return ColumnType::kOther;
}

std::size_t DatabaseSchema::table_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const SchemaItem& it) { return it.is_table(); }));
}

std::size_t DatabaseSchema::column_count() const noexcept { return items.size() - table_count(); }

std::vector<ItemId> DatabaseSchema::tables() const {
  std::vector<ItemId> out;
  for (const auto& it : items) {
    if (it.is_table()) out.push_back(it.id);
  }
  return out;
}

std::vector<ItemId> DatabaseSchema::columns_of(ItemId table) const {
  std::vector<ItemId> out;
  for (const auto& it : items) {
    if (it.is_column() && it.parent_table == table) out.push_back(it.id);
  }
  return out;
}

std::vector<std::string> DatabaseSchema::item_names() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.name);
  return out;
}

nlohmann::json to_json(const DatabaseSchema& schema) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : schema.items) {
    nlohmann::json j{{"id", it.id},
                     {"kind", it.is_table() ? "table" : "column"},
                     {"name", it.name},
                     {"original_name", it.original_name},
                     {"is_primary_key", it.is_primary_key}};
    j["parent_table"] = it.parent_table ? nlohmann::json(*it.parent_table) : nlohmann::json(nullptr);
    j["column_type"] =
        it.column_type ? nlohmann::json(std::string(to_string(*it.column_type))) : nlohmann::json(nullptr);
    j["foreign_key_to"] = it.foreign_key_to ? nlohmann::json(*it.foreign_key_to) : nlohmann::json(nullptr);
    items.push_back(std::move(j));
  }
  return {{"db_id", schema.db_id}, {"db_path", schema.db_path.string()}, {"items", std::move(items)}};
}

void ValueStore::load(const DatabaseSchema& schema, std::size_t cap) {
  for (const auto& it : schema.items) {
    if (it.is_column()) values_[{schema.db_id, it.id}] = column_values(schema, it, cap);
  }
}

void ValueStore::set(const DatabaseSchema& schema, ItemId column, std::set<std::string> values) {
  if (column >= schema.items.size() || !schema.items[column].is_column()) {
    throw Error(ErrorCode::kNotAColumn, "item " + std::to_string(column) + " of " + schema.db_id);
  }
  values_[{schema.db_id, column}] = std::move(values);
}

const std::set<std::string>& ValueStore::values(const std::string& db_id, ItemId column) const {
  static const std::set<std::string> kEmpty;
  auto found = values_.find({db_id, column});
  return found == values_.end() ? kEmpty : found->second;
}

bool ValueStore::contains(const std::string& db_id, ItemId column, const std::string& value) const {
  return values(db_id, column).contains(value);
}

}  // namespace skelsql
