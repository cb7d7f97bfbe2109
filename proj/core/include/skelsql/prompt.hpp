#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skelsql/schema.hpp"

namespace skelsql {

struct DemonstrationExample {
  std::uint64_t example_id = 0;
  std::string question;
  std::string skeleton;
  std::string sql;
  std::string db_id;
  double similarity = 0.0;
};

struct FilteredSchema {
  std::vector<ItemId> kept;  // ascending item ids
  std::string rendering;
  std::map<ItemId, std::vector<std::string>> sample_values;

  bool contains(ItemId id) const;
};

struct TextRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool empty() const noexcept { return begin == end; }
};

enum class PromptKind { kInitial, kFallback };

struct Prompt {
  PromptKind kind = PromptKind::kInitial;
  std::string text;
  TextRange demonstrations;
  TextRange schema;
  TextRange question;
  std::size_t token_estimate = 0;
  std::size_t demonstrations_used = 0;
  std::string question_text;
};

inline constexpr std::size_t kMaxSampleValues = 3;
inline constexpr std::size_t kDefaultPromptTokenCap = 6000;

/// About four characters per token.
std::size_t estimate_tokens(std::string_view text);

/// Keeps items scoring at least `theta`, then closes the set: parent tables of
/// kept columns, primary keys of kept tables, and both endpoints of foreign
/// keys whose tables are both kept. When nothing scores high enough, the
/// best-scoring table and all of its columns are kept instead.
FilteredSchema filter_schema(const DatabaseSchema& schema, std::span<const double> item_scores, double theta,
                             const ValueStore& values = {});

/// Every item of the schema; used by the fallback prompt.
FilteredSchema full_schema(const DatabaseSchema& schema, const ValueStore& values = {});

/// CREATE TABLE lines for kept tables with their kept columns, followed by
/// example-value and foreign-key comments.
std::string render_schema(const DatabaseSchema& schema, std::span<const ItemId> kept,
                          const std::map<ItemId, std::vector<std::string>>& sample_values);

/// "-- Question: <q>\n<sql>;\n" per demonstration, separated by blank lines,
/// most similar first (stable for equal similarities).
std::string render_demonstrations(std::span<const DemonstrationExample> demos);

/// Demonstrations, schema, question, in that order. Lowest-similarity
/// demonstrations are dropped until the estimate fits `token_cap`.
Prompt build_prompt(std::span<const DemonstrationExample> demos, const FilteredSchema& filtered,
                    const Example& question, std::size_t token_cap = kDefaultPromptTokenCap);

/// Complete schema plus the failed SQL and the database error; no demonstrations.
Prompt build_fallback_prompt(const DatabaseSchema& schema, const Example& question, std::string_view failed_sql,
                             std::string_view error, const ValueStore& values = {});

}  // namespace skelsql
