#include "skelsql/spider.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <tuple>

#include "skelsql/error.hpp"
#include "sqlite_handle.hpp"

namespace skelsql {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

nlohmann::json read_json(const std::filesystem::path& file, ErrorCode malformed) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec)) {
    throw Error(ErrorCode::kFileMissing, file.string());
  }
  std::ifstream in(file);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(malformed, file.string() + ": " + e.what());
  }
}

[[noreturn]] void malformed(const std::string& db_id, const std::string& reason) {
  throw Error(ErrorCode::kMalformedSchema, "db '" + db_id + "': " + reason);
}

std::vector<std::vector<long long>> primary_key_groups(const nlohmann::json& pks) {
  // Newer Spider releases nest composite keys as lists.
  std::vector<std::vector<long long>> out;
  for (const auto& pk : pks) {
    if (pk.is_array()) {
      out.push_back(pk.get<std::vector<long long>>());
    } else {
      out.push_back({pk.get<long long>()});
    }
  }
  return out;
}

DatabaseSchema parse_one_schema(const nlohmann::json& entry, const std::filesystem::path& db_dir) {
  if (!entry.is_object() || !entry.contains("db_id") || !entry["db_id"].is_string()) {
    malformed("?", "missing db_id");
  }
  DatabaseSchema schema;
  schema.db_id = entry["db_id"].get<std::string>();
  if (schema.db_id.empty()) malformed("?", "empty db_id");
  for (const char* field : {"table_names_original", "column_names_original", "column_types"}) {
    if (!entry.contains(field) || !entry[field].is_array()) {
      malformed(schema.db_id, std::string("missing array '") + field + "'");
    }
  }

  try {
    const auto& tables = entry["table_names_original"];
    const auto& columns = entry["column_names_original"];
    const auto& types = entry["column_types"];
    if (types.size() != columns.size()) malformed(schema.db_id, "column_types length differs from columns");

    for (std::size_t t = 0; t < tables.size(); ++t) {
      SchemaItem item;
      item.id = schema.items.size();
      item.kind = ItemKind::kTable;
      item.original_name = tables[t].get<std::string>();
      item.name = display_name(item.original_name);
      schema.items.push_back(std::move(item));
    }

    // Group spider column indices by table, keeping file order within a table.
    std::vector<std::vector<std::size_t>> by_table(tables.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& pair = columns[c];
      if (!pair.is_array() || pair.size() != 2) malformed(schema.db_id, "column entry is not [table, name]");
      const long long table_index = pair[0].get<long long>();
      if (table_index == -1) continue;  // the "*" pseudo column
      if (table_index < 0 || static_cast<std::size_t>(table_index) >= tables.size()) {
        malformed(schema.db_id, "column " + std::to_string(c) + " references table index " +
                                    std::to_string(table_index) + " out of range");
      }
      by_table[static_cast<std::size_t>(table_index)].push_back(c);
    }

    std::map<std::size_t, ItemId> spider_to_item;
    for (std::size_t t = 0; t < by_table.size(); ++t) {
      for (std::size_t c : by_table[t]) {
        SchemaItem item;
        item.id = schema.items.size();
        item.kind = ItemKind::kColumn;
        item.original_name = columns[c][1].get<std::string>();
        item.name = display_name(item.original_name);
        item.parent_table = t;
        item.column_type = parse_column_type(types[c].get<std::string>());
        spider_to_item[c] = item.id;
        schema.items.push_back(std::move(item));
      }
    }

    auto resolve = [&](long long spider_index) -> ItemId {
      auto found = spider_to_item.find(static_cast<std::size_t>(spider_index));
      if (spider_index < 0 || found == spider_to_item.end()) {
        malformed(schema.db_id, "key references unknown column " + std::to_string(spider_index));
      }
      return found->second;
    };

    if (entry.contains("primary_keys")) {
      for (const auto& group : primary_key_groups(entry["primary_keys"])) {
        for (long long c : group) schema.items[resolve(c)].is_primary_key = true;
      }
    }
    if (entry.contains("foreign_keys")) {
      for (const auto& fk : entry["foreign_keys"]) {
        if (!fk.is_array() || fk.size() != 2) malformed(schema.db_id, "foreign key is not a pair");
        auto& from = schema.items[resolve(fk[0].get<long long>())];
        const ItemId to = resolve(fk[1].get<long long>());
        if (!from.foreign_key_to) from.foreign_key_to = to;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(schema.db_id, e.what());
  }

  // Names must be unique within (kind, parent_table).
  std::map<std::tuple<bool, std::optional<ItemId>, std::string>, ItemId> seen;
  for (const auto& it : schema.items) {
    auto key = std::make_tuple(it.is_table(), it.parent_table, it.name);
    if (!seen.emplace(key, it.id).second) malformed(schema.db_id, "duplicate item name '" + it.name + "'");
  }

  if (!db_dir.empty()) schema.db_path = db_dir / schema.db_id / (schema.db_id + ".sqlite");
  return schema;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos) break;
    std::string_view word = text.substr(pos, end - pos);
    pos = end;

    std::size_t lead = 0;
    while (lead < word.size() && is_punct(word[lead])) ++lead;
    if (lead == word.size()) {
      for (char c : word) tokens.emplace_back(1, c);
      continue;
    }
    std::size_t trail = word.size();
    while (trail > lead && is_punct(word[trail - 1])) --trail;

    for (std::size_t i = 0; i < lead; ++i) tokens.emplace_back(1, word[i]);
    tokens.push_back(lower(word.substr(lead, trail - lead)));
    for (std::size_t i = trail; i < word.size(); ++i) tokens.emplace_back(1, word[i]);
  }
  return tokens;
}

std::string display_name(std::string_view original) {
  std::string out;
  for (char c : lower(trim(original))) {
    const char mapped = (c == '_') ? ' ' : c;
    if (mapped == ' ' && (out.empty() || out.back() == ' ')) continue;
    out += mapped;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<DatabaseSchema> parse_schemas(const nlohmann::json& doc, const std::filesystem::path& db_dir) {
  if (!doc.is_array()) malformed("?", "tables file is not a JSON array");
  std::vector<DatabaseSchema> out;
  out.reserve(doc.size());
  for (const auto& entry : doc) out.push_back(parse_one_schema(entry, db_dir));
  std::sort(out.begin(), out.end(),
            [](const DatabaseSchema& a, const DatabaseSchema& b) { return a.db_id < b.db_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].db_id == out[i - 1].db_id) malformed(out[i].db_id, "db_id appears twice");
  }
  return out;
}

std::vector<DatabaseSchema> load_schemas(const std::filesystem::path& tables_file,
                                         const std::filesystem::path& db_dir) {
  return parse_schemas(read_json(tables_file, ErrorCode::kMalformedSchema), db_dir);
}

const DatabaseSchema& find_schema(std::span<const DatabaseSchema> schemas, std::string_view db_id) {
  auto found = std::lower_bound(schemas.begin(), schemas.end(), db_id,
                                [](const DatabaseSchema& s, std::string_view id) { return s.db_id < id; });
  if (found == schemas.end() || found->db_id != db_id) {
    // Tolerate unsorted input.
    found = std::find_if(schemas.begin(), schemas.end(),
                         [&](const DatabaseSchema& s) { return s.db_id == db_id; });
    if (found == schemas.end()) throw Error(ErrorCode::kUnknownDbId, std::string(db_id));
  }
  return *found;
}

std::vector<Example> parse_examples(const nlohmann::json& doc, std::span<const DatabaseSchema> schemas) {
  if (!doc.is_array()) throw Error(ErrorCode::kMalformedExample, "examples file is not a JSON array");
  std::vector<Example> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    auto field = [&](const char* name) -> std::string {
      if (!entry.is_object() || !entry.contains(name) || !entry[name].is_string()) {
        throw Error(ErrorCode::kMalformedExample, "index " + std::to_string(i) + ": missing '" + name + "'");
      }
      return entry[name].get<std::string>();
    };
    Example ex;
    ex.question_text = field("question");
    ex.gold_sql = trim(field("query"));
    ex.db_id = field("db_id");
    ex.question_tokens = tokenize(ex.question_text);
    if (ex.question_tokens.empty()) {
      throw Error(ErrorCode::kMalformedExample, "index " + std::to_string(i) + ": empty question");
    }
    if (ex.gold_sql.empty()) {
      throw Error(ErrorCode::kMalformedExample, "index " + std::to_string(i) + ": empty query");
    }
    find_schema(schemas, ex.db_id);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> load_examples(const std::filesystem::path& file, std::span<const DatabaseSchema> schemas) {
  return parse_examples(read_json(file, ErrorCode::kMalformedExample), schemas);
}

std::set<std::string> column_values(const DatabaseSchema& db, const SchemaItem& column, std::size_t cap) {
  if (!column.is_column() || !column.parent_table) {
    throw Error(ErrorCode::kNotAColumn, "'" + column.original_name + "' is not a column");
  }
  const auto& table = db.item(*column.parent_table);
  auto conn = detail::open_read_only(db.db_path);

  const std::string sql = "SELECT DISTINCT CAST(" + detail::quote_identifier(column.original_name) +
                          " AS TEXT) FROM " + detail::quote_identifier(table.original_name) + " WHERE " +
                          detail::quote_identifier(column.original_name) + " IS NOT NULL";
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(conn.get(), sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
    throw Error(ErrorCode::kDbUnreadable, db.db_id + ": " + sqlite3_errmsg(conn.get()));
  }
  detail::SqliteStatement stmt(raw);

  std::set<std::string> all;
  int rc = SQLITE_ROW;
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 0));
    if (!text) continue;
    std::string value = lower(trim(text));
    if (!value.empty()) all.insert(std::move(value));
  }
  if (rc != SQLITE_DONE) throw Error(ErrorCode::kDbUnreadable, db.db_id + ": " + sqlite3_errmsg(conn.get()));

  std::set<std::string> out;
  for (const auto& v : all) {
    if (out.size() >= cap) break;
    out.insert(v);
  }
  return out;
}

}  // namespace skelsql
