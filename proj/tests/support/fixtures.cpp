#include "fixtures.hpp"

#include <atomic>
#include <random>
#include <stdexcept>

#include <sqlite3.h>

#include "skelsql/spider.hpp"

namespace skelsql::testing {

std::filesystem::path fixture_dir() { return SKELSQL_FIXTURE_DIR; }
std::filesystem::path fixture_db_dir() { return SKELSQL_FIXTURE_DB_DIR; }
std::filesystem::path golden_dir() { return SKELSQL_GOLDEN_DIR; }

const std::vector<DatabaseSchema>& mini_spider_schemas() {
  static const auto schemas = load_schemas(fixture_dir() / "tables.json", fixture_db_dir());
  return schemas;
}

const DatabaseSchema& mini_spider_schema(const std::string& db_id) {
  return find_schema(mini_spider_schemas(), db_id);
}

const ValueStore& mini_spider_values() {
  static const ValueStore values = [] {
    ValueStore v;
    for (const auto& s : mini_spider_schemas()) v.load(s);
    return v;
  }();
  return values;
}

RunConfig mini_spider_config(const std::filesystem::path& work) {
  RunConfig config;
  config.tables = fixture_dir() / "tables.json";
  config.train = fixture_dir() / "train.json";
  config.dev = fixture_dir() / "dev.json";
  config.db_dir = fixture_db_dir();
  config.index = work / "skeletons.skix";
  config.out = work / "report.jsonl";
  return config;
}

Example make_example(const std::string& question, const std::string& db_id, const std::string& gold_sql) {
  return {question, tokenize(question), gold_sql, db_id};
}

DatabaseSchema make_schema(const std::string& db_id, const std::vector<TableSpec>& tables) {
  DatabaseSchema schema;
  schema.db_id = db_id;
  for (const auto& [table, columns] : tables) {
    SchemaItem item;
    item.id = schema.items.size();
    item.kind = ItemKind::kTable;
    item.original_name = table;
    item.name = display_name(table);
    schema.items.push_back(item);
  }
  for (std::size_t t = 0; t < tables.size(); ++t) {
    for (const auto& column : tables[t].second) {
      SchemaItem item;
      item.id = schema.items.size();
      item.kind = ItemKind::kColumn;
      item.original_name = column;
      item.name = display_name(column);
      item.parent_table = t;
      item.column_type = ColumnType::kText;
      schema.items.push_back(item);
    }
  }
  return schema;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("skelsql-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void make_database(const std::filesystem::path& file, const std::string& script) {
  std::filesystem::create_directories(file.parent_path());
  sqlite3* db = nullptr;
  if (sqlite3_open(file.c_str(), &db) != SQLITE_OK) {
    sqlite3_close(db);
    throw std::runtime_error("cannot create " + file.string());
  }
  char* err = nullptr;
  const int rc = sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err);
  std::string message = err ? err : "";
  sqlite3_free(err);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw std::runtime_error("seed script failed: " + message);
}

}  // namespace skelsql::testing
