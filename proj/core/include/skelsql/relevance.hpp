#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelsql/encoder.hpp"
#include "skelsql/matrix.hpp"
#include "skelsql/schema.hpp"

namespace skelsql {

inline constexpr std::string_view kMaskToken = "[MASK]";

struct RelevanceParams {
  double alpha = 0.9;  // POS weight for nouns and numbers
  double beta = 0.5;   // weight of the matching matrix against the probe distances
  double tau = 0.6;    // tokens scoring at or above tau are masked
};

/// Everything computed for one question against one schema. Matrices are
/// |Q| x |S|; item_scores has one entry per schema item.
struct RelevanceBundle {
  Matrix d_p;       // raw Poincare distances between masked and unmasked item representations
  Matrix d_p_norm;  // d_p min-max normalized over the whole matrix
  Matrix m_m;       // name/value matches in {0, 1, 2}
  Matrix r;         // d_p_norm + beta * m_m
  Vector p;         // alpha for nouns and numbers, else 0
  Vector q_sco;     // per-token relevance
  Vector item_scores;
};

struct QuestionSkeleton {
  std::vector<std::string> tokens;
  std::vector<std::size_t> masked_positions;
  std::string source_question;

  /// Tokens joined by single spaces; the retrieval key.
  std::string text() const;
};

/// |Q| + 1 encoder calls: one unmasked run, then one run per masked token.
/// Entry (i, j) is the distance between item j's projected representation
/// with token i masked and without masking.
Matrix build_proton_matrix(const Example& question, const DatabaseSchema& schema, const EncoderBackend& backend);

/// Same computation from precomputed encoder output; masked[i] masks token i.
Matrix proton_matrix_from(const SchemaRepresentations& unmasked, std::span<const SchemaRepresentations> masked);

/// 1 point when a contiguous token span through position i spells the item's
/// name, 1 point when token i equals one of the column's stored values.
Matrix build_matching_matrix(const Example& question, const DatabaseSchema& schema, const ValueStore& values);

/// Min-max normalization over all entries; a constant matrix maps to zeros.
Matrix normalize_min_max(const Matrix& m);

/// normalize_min_max(d_p) + beta * m_m.
Matrix fuse_relevance(const Matrix& d_p, const Matrix& m_m, double beta);

Vector pos_vector(const PosTagging& tags, double alpha);

/// Q_sco_i = (mean_j R_ij + P_i) / 2, where the mean runs over the schema
/// items token i is linked to (R_ij != 0). For a dense probe that is every
/// item; a token linked to nothing contributes a mean of 0.
Vector question_scores(const Matrix& r, std::span<const double> p);

/// Token i is kept when q_sco[i] < tau and replaced by one [MASK] otherwise.
QuestionSkeleton make_skeleton(const Example& question, std::span<const double> q_sco, double tau);

/// Column-wise max of r, min-max normalized over items into [0, 1].
Vector schema_item_scores(const Matrix& r);

struct Desemanticized {
  RelevanceBundle bundle;
  QuestionSkeleton skeleton;
};

Desemanticized desemanticize(const Example& question, const DatabaseSchema& schema, const ValueStore& values,
                             const EncoderBackend& backend, const RelevanceParams& params);

nlohmann::json to_json(const Desemanticized& result);

}  // namespace skelsql
