#include "skelsql/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "skelsql/error.hpp"

namespace skelsql {
namespace {

std::string terminated(std::string_view sql) {
  std::string out(sql);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  if (out.empty() || out.back() != ';') out += ';';
  return out;
}

std::string one_line(std::string_view text) {
  std::string out;
  for (char c : text) out += (c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

std::map<ItemId, std::vector<std::string>> samples_for(const DatabaseSchema& schema, std::span<const ItemId> kept,
                                                       const ValueStore& values) {
  std::map<ItemId, std::vector<std::string>> out;
  for (ItemId id : kept) {
    if (!schema.item(id).is_column()) continue;
    const auto& all = values.values(schema.db_id, id);
    if (all.empty()) continue;
    std::vector<std::string> first;
    for (const auto& v : all) {
      if (first.size() == kMaxSampleValues) break;
      first.push_back(v);
    }
    out.emplace(id, std::move(first));
  }
  return out;
}

std::vector<DemonstrationExample> by_similarity(std::span<const DemonstrationExample> demos) {
  std::vector<DemonstrationExample> sorted(demos.begin(), demos.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
  return sorted;
}

std::string question_part(const Example& question) {
  return "-- Question: " + one_line(question.question_text) + "\n-- SQL:\n";
}

}  // namespace

bool FilteredSchema::contains(ItemId id) const { return std::binary_search(kept.begin(), kept.end(), id); }

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

FilteredSchema filter_schema(const DatabaseSchema& schema, std::span<const double> item_scores, double theta,
                             const ValueStore& values) {
  if (item_scores.size() != schema.items.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(item_scores.size()) + " scores for " +
                                               std::to_string(schema.items.size()) + " schema items");
  }
  std::set<ItemId> kept;
  for (const auto& it : schema.items) {
    if (item_scores[it.id] >= theta) kept.insert(it.id);
  }

  if (kept.empty()) {
    std::optional<ItemId> best;
    for (ItemId t : schema.tables()) {
      if (!best || item_scores[t] > item_scores[*best]) best = t;
    }
    if (best) {
      kept.insert(*best);
      for (ItemId c : schema.columns_of(*best)) kept.insert(c);
    }
  } else {
    for (ItemId id : std::vector<ItemId>(kept.begin(), kept.end())) {
      const auto& it = schema.item(id);
      if (it.is_column()) kept.insert(*it.parent_table);
    }
    for (const auto& it : schema.items) {
      if (it.is_column() && it.is_primary_key && kept.contains(*it.parent_table)) kept.insert(it.id);
    }
    for (const auto& it : schema.items) {
      if (!it.is_column() || !it.foreign_key_to) continue;
      const auto& target = schema.item(*it.foreign_key_to);
      if (kept.contains(*it.parent_table) && kept.contains(*target.parent_table)) {
        kept.insert(it.id);
        kept.insert(target.id);
      }
    }
  }

  FilteredSchema out;
  out.kept.assign(kept.begin(), kept.end());
  out.sample_values = samples_for(schema, out.kept, values);
  out.rendering = render_schema(schema, out.kept, out.sample_values);
  return out;
}

FilteredSchema full_schema(const DatabaseSchema& schema, const ValueStore& values) {
  FilteredSchema out;
  for (const auto& it : schema.items) out.kept.push_back(it.id);
  out.sample_values = samples_for(schema, out.kept, values);
  out.rendering = render_schema(schema, out.kept, out.sample_values);
  return out;
}

std::string render_schema(const DatabaseSchema& schema, std::span<const ItemId> kept,
                          const std::map<ItemId, std::vector<std::string>>& sample_values) {
  const std::set<ItemId> keep(kept.begin(), kept.end());
  std::string out;
  for (ItemId t : schema.tables()) {
    if (!keep.contains(t)) continue;
    std::vector<ItemId> cols;
    for (ItemId c : schema.columns_of(t)) {
      if (keep.contains(c)) cols.push_back(c);
    }

    out += "CREATE TABLE " + schema.item(t).original_name + " (";
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto& col = schema.item(cols[k]);
      if (k) out += ", ";
      out += col.original_name + " " + std::string(to_string(col.column_type.value_or(ColumnType::kOther)));
    }
    out += ");\n";

    for (ItemId c : cols) {
      auto found = sample_values.find(c);
      if (found == sample_values.end() || found->second.empty()) continue;
      out += "-- " + schema.item(c).original_name + " examples: ";
      for (std::size_t k = 0; k < found->second.size(); ++k) {
        if (k) out += ", ";
        out += one_line(found->second[k]);
      }
      out += '\n';
    }
    for (ItemId c : cols) {
      const auto& col = schema.item(c);
      if (!col.foreign_key_to || !keep.contains(*col.foreign_key_to)) continue;
      const auto& target = schema.item(*col.foreign_key_to);
      out += "-- FOREIGN KEY: " + schema.item(t).original_name + "." + col.original_name + " REFERENCES " +
             schema.item(*target.parent_table).original_name + "." + target.original_name + '\n';
    }
  }
  return out;
}

std::string render_demonstrations(std::span<const DemonstrationExample> unsorted) {
  const auto demos = by_similarity(unsorted);
  std::string out;
  for (std::size_t k = 0; k < demos.size(); ++k) {
    if (k) out += '\n';
    out += "-- Question: " + one_line(demos[k].question) + "\n" + terminated(demos[k].sql) + "\n";
  }
  return out;
}

Prompt build_prompt(std::span<const DemonstrationExample> unsorted, const FilteredSchema& filtered,
                    const Example& question, std::size_t token_cap) {
  if (filtered.kept.empty()) throw Error(ErrorCode::kPreconditionViolation, "prompt needs a non-empty schema");
  const auto sorted = by_similarity(unsorted);
  const std::span<const DemonstrationExample> demos(sorted);
  std::size_t used = demos.size();
  while (true) {
    Prompt p;
    p.kind = PromptKind::kInitial;
    p.question_text = question.question_text;
    p.demonstrations_used = used;

    p.demonstrations.begin = 0;
    p.text = render_demonstrations(demos.first(used));
    p.demonstrations.end = p.text.size();
    if (!p.text.empty()) p.text += '\n';

    p.schema.begin = p.text.size();
    p.text += filtered.rendering;
    p.schema.end = p.text.size();
    p.text += '\n';

    p.question.begin = p.text.size();
    p.text += question_part(question);
    p.question.end = p.text.size();

    p.token_estimate = estimate_tokens(p.text);
    if (p.token_estimate <= token_cap || used == 0) return p;
    --used;
  }
}

Prompt build_fallback_prompt(const DatabaseSchema& schema, const Example& question, std::string_view failed_sql,
                             std::string_view error, const ValueStore& values) {
  Prompt p;
  p.kind = PromptKind::kFallback;
  p.question_text = question.question_text;

  p.schema.begin = 0;
  p.text = full_schema(schema, values).rendering;
  p.schema.end = p.text.size();
  p.text += '\n';

  p.question.begin = p.text.size();
  p.text += "-- Question: " + one_line(question.question_text) + "\n";
  p.text += "-- A previous SQL query for this question failed.\n";
  p.text += "-- Failed SQL: " + one_line(failed_sql) + "\n";
  p.text += "-- Error: " + one_line(error) + "\n";
  p.text += "-- Write a corrected SQLite query that answers the question using the complete schema above.\n";
  p.text += "-- SQL:\n";
  p.question.end = p.text.size();

  p.token_estimate = estimate_tokens(p.text);
  return p;
}

}  // namespace skelsql
