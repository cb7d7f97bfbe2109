#include "skelsql/relevance.hpp"

#include <algorithm>
#include <limits>

#include "skelsql/error.hpp"
#include "skelsql/hyperbolic.hpp"

namespace skelsql {
namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

std::vector<std::string> split_words(const std::string& name) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start <= name.size()) {
    const auto end = name.find(' ', start);
    const auto piece = name.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!piece.empty()) words.push_back(piece);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return words;
}

void check_representations(const SchemaRepresentations& reps, std::size_t items, std::size_t dimension) {
  if (reps.vectors.size() != items) {
    throw Error(ErrorCode::kDimensionMismatch, "backend returned " + std::to_string(reps.vectors.size()) +
                                                   " vectors for " + std::to_string(items) + " schema items");
  }
  for (const auto& v : reps.vectors) {
    if (v.size() != dimension) {
      throw Error(ErrorCode::kDimensionMismatch, "backend vector of dimension " + std::to_string(v.size()) +
                                                     ", expected " + std::to_string(dimension));
    }
  }
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

std::string QuestionSkeleton::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Matrix proton_matrix_from(const SchemaRepresentations& unmasked, std::span<const SchemaRepresentations> masked) {
  const std::size_t items = unmasked.vectors.size();
  const std::size_t dimension = items ? unmasked.vectors.front().size() : 0;
  check_representations(unmasked, items, dimension);

  std::vector<Vector> anchor;
  anchor.reserve(items);
  for (const auto& h : unmasked.vectors) anchor.push_back(hyperbolic::clip_to_ball(hyperbolic::project(h)));

  Matrix d_p(masked.size(), items);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    check_representations(masked[i], items, dimension);
    for (std::size_t j = 0; j < items; ++j) {
      const auto shifted = hyperbolic::clip_to_ball(hyperbolic::project(masked[i].vectors[j]));
      d_p(i, j) = hyperbolic::poincare_distance(shifted, anchor[j]);
    }
  }
  return d_p;
}

Matrix build_proton_matrix(const Example& question, const DatabaseSchema& schema, const EncoderBackend& backend) {
  EncodeRequest request{question.question_tokens, schema.item_names(), std::nullopt};
  const SchemaRepresentations unmasked = backend.encode(request);

  std::vector<SchemaRepresentations> masked;
  masked.reserve(question.question_tokens.size());
  for (std::size_t i = 0; i < question.question_tokens.size(); ++i) {
    request.masked_question_index = i;
    masked.push_back(backend.encode(request));
  }
  return proton_matrix_from(unmasked, masked);
}

Matrix build_matching_matrix(const Example& question, const DatabaseSchema& schema, const ValueStore& values) {
  const auto& tokens = question.question_tokens;
  Matrix m(tokens.size(), schema.items.size());

  for (const auto& item : schema.items) {
    const auto words = split_words(item.name);
    std::vector<bool> name_hit(tokens.size(), false);
    if (!words.empty() && words.size() <= tokens.size()) {
      for (std::size_t start = 0; start + words.size() <= tokens.size(); ++start) {
        if (std::equal(words.begin(), words.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start))) {
          std::fill_n(name_hit.begin() + static_cast<std::ptrdiff_t>(start), words.size(), true);
        }
      }
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool value_hit = item.is_column() && values.contains(schema.db_id, item.id, tokens[i]);
      m(i, item.id) = static_cast<double>(name_hit[i]) + static_cast<double>(value_hit);
    }
  }
  return m;
}

Matrix normalize_min_max(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  if (m.empty()) return out;
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double min = *lo;
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  auto src = m.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = (src[k] - min) / range;
  return out;
}

Matrix fuse_relevance(const Matrix& d_p, const Matrix& m_m, double beta) {
  require_shape(d_p.same_shape(m_m), "D_p and M_m shapes differ");
  if (!(beta >= 0.0)) throw Error(ErrorCode::kPreconditionViolation, "beta must be >= 0");
  Matrix r = normalize_min_max(d_p);
  auto dst = r.values();
  auto src = m_m.values();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += beta * src[k];
  return r;
}

Vector pos_vector(const PosTagging& tags, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kPreconditionViolation, "alpha must lie in [0, 1]");
  Vector p;
  p.reserve(tags.tags.size());
  for (auto t : tags.tags) p.push_back(t == PosTag::kOther ? 0.0 : alpha);
  return p;
}

Vector question_scores(const Matrix& r, std::span<const double> p) {
  require_shape(r.rows() == p.size(), "R has " + std::to_string(r.rows()) + " rows but P has " +
                                          std::to_string(p.size()) + " entries");
  Vector scores(r.rows());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double sum = 0.0;
    std::size_t linked = 0;
    for (double x : r.row(i)) {
      if (x != 0.0) {
        sum += x;
        ++linked;
      }
    }
    const double mean = linked ? sum / static_cast<double>(linked) : 0.0;
    scores[i] = 0.5 * (mean + p[i]);
  }
  return scores;
}

QuestionSkeleton make_skeleton(const Example& question, std::span<const double> q_sco, double tau) {
  require_shape(q_sco.size() == question.question_tokens.size(), "score vector length differs from question");
  QuestionSkeleton skeleton;
  skeleton.source_question = question.question_text;
  skeleton.tokens.reserve(q_sco.size());
  for (std::size_t i = 0; i < q_sco.size(); ++i) {
    if (q_sco[i] < tau) {
      skeleton.tokens.push_back(question.question_tokens[i]);
    } else {
      skeleton.tokens.emplace_back(kMaskToken);
      skeleton.masked_positions.push_back(i);
    }
  }
  return skeleton;
}

Vector schema_item_scores(const Matrix& r) {
  if (r.empty()) throw Error(ErrorCode::kPreconditionViolation, "empty relevance matrix");
  Vector scores(r.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t j = 0; j < r.cols(); ++j) scores[j] = std::max(scores[j], r(i, j));
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& s : scores) s = range > 0.0 ? (s - min) / range : 0.0;
  return scores;
}

Desemanticized desemanticize(const Example& question, const DatabaseSchema& schema, const ValueStore& values,
                             const EncoderBackend& backend, const RelevanceParams& params) {
  Desemanticized out;
  auto& b = out.bundle;
  b.d_p = build_proton_matrix(question, schema, backend);
  b.d_p_norm = normalize_min_max(b.d_p);
  b.m_m = build_matching_matrix(question, schema, values);
  b.r = fuse_relevance(b.d_p, b.m_m, params.beta);
  b.p = pos_vector(backend.pos_tag(question.question_tokens), params.alpha);
  require_shape(b.p.size() == question.question_tokens.size(), "backend returned the wrong number of POS tags");
  b.q_sco = question_scores(b.r, b.p);
  b.item_scores = schema_item_scores(b.r);
  out.skeleton = make_skeleton(question, b.q_sco, params.tau);
  return out;
}

nlohmann::json to_json(const Desemanticized& result) {
  const auto& b = result.bundle;
  return {{"question", result.skeleton.source_question},
          {"skeleton", result.skeleton.text()},
          {"masked_positions", result.skeleton.masked_positions},
          {"d_p", matrix_json(b.d_p)},
          {"d_p_norm", matrix_json(b.d_p_norm)},
          {"m_m", matrix_json(b.m_m)},
          {"r", matrix_json(b.r)},
          {"p", b.p},
          {"q_sco", b.q_sco},
          {"item_scores", b.item_scores}};
}

}  // namespace skelsql
