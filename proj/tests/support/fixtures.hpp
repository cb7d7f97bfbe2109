#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skelsql/harness.hpp"
#include "skelsql/schema.hpp"

namespace skelsql::testing {

std::filesystem::path fixture_dir();
std::filesystem::path fixture_db_dir();
std::filesystem::path golden_dir();

/// Schemas of the bundled mini-Spider fixture, with database paths resolved.
const std::vector<DatabaseSchema>& mini_spider_schemas();
const DatabaseSchema& mini_spider_schema(const std::string& db_id);
/// Values of every fixture database.
const ValueStore& mini_spider_values();

/// RunConfig pointing at the fixture, index and report under `work`.
RunConfig mini_spider_config(const std::filesystem::path& work);

Example make_example(const std::string& question, const std::string& db_id, const std::string& gold_sql = "");

/// Schema with tables of the given columns, built the way the Spider loader
/// would (tables first, then columns per table).
using TableSpec = std::pair<std::string, std::vector<std::string>>;
DatabaseSchema make_schema(const std::string& db_id, const std::vector<TableSpec>& tables);

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Creates a SQLite file and runs `script` in it.
void make_database(const std::filesystem::path& file, const std::string& script);

}  // namespace skelsql::testing
