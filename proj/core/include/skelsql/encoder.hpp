#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skelsql {

using Vector = std::vector<double>;

/// Question and linearized schema names fed to the encoder. When
/// masked_question_index is set, that question token is replaced by the
/// model's mask token before encoding.
struct EncodeRequest {
  std::vector<std::string> question_tokens;
  std::vector<std::string> schema_tokens;
  std::optional<std::size_t> masked_question_index;
};

/// One vector per schema item, all of the backend's dimension.
struct SchemaRepresentations {
  std::vector<Vector> vectors;
  std::size_t dimension = 0;
  std::optional<std::size_t> masked_index;
};

enum class PosTag { kNoun, kNumber, kOther };

std::string_view to_string(PosTag tag) noexcept;
PosTag parse_pos_tag(std::string_view tag);

struct PosTagging {
  std::vector<PosTag> tags;
};

/// Contextual schema representations, sentence embeddings and POS tags.
/// Implementations must be safe to call concurrently.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;

  virtual SchemaRepresentations encode(const EncodeRequest& request) const = 0;
  /// Unit-normalized.
  virtual Vector sentence_embed(std::string_view text) const = 0;
  virtual PosTagging pos_tag(std::span<const std::string> tokens) const = 0;
};

/// Checks the preconditions shared by every backend.
void validate_request(const EncodeRequest& request);

// ---------------------------------------------------------------------------
// Reference backend

/// Seeded unit vector for a string; identical on every platform.
Vector hash_embedding(std::string_view key, std::size_t dimension, std::uint64_t seed);

/// Character trigrams of each word of a lowercase string. Words shorter than
/// three characters contribute themselves.
std::vector<std::string> character_trigrams(std::string_view text);

/// Number of distinct trigrams shared by two strings.
std::size_t trigram_overlap(std::string_view a, std::string_view b);

/// Deterministic, dependency-free backend.
///
/// The vector of schema item s is the normalized sum of its trigram
/// embeddings, plus, for every unmasked question token q, trigram_overlap(q, s)
/// copies of q's embedding. Masking q therefore moves exactly the items that
/// share a trigram with q and leaves every other vector bit-identical.
class ReferenceEncoder final : public EncoderBackend {
 public:
  static constexpr std::size_t kDefaultDimension = 64;

  explicit ReferenceEncoder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = 0);

  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "reference"; }

  SchemaRepresentations encode(const EncodeRequest& request) const override;
  Vector sentence_embed(std::string_view text) const override;
  PosTagging pos_tag(std::span<const std::string> tokens) const override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Closed-class tagger: function words and punctuation are other, numerals
/// are number, everything else is noun.
PosTag reference_pos_tag(std::string_view token);

// ---------------------------------------------------------------------------
// Remote sidecar

struct SidecarOptions {
  std::string url = "http://127.0.0.1:8765";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
};

/// HTTP client for the encoder sidecar (/embed_masked, /sentence_embed, /pos,
/// /healthz). The dimension is read from /healthz on construction and every
/// response is checked against it.
class SidecarEncoder final : public EncoderBackend {
 public:
  explicit SidecarEncoder(SidecarOptions options);
  ~SidecarEncoder() override;

  std::size_t dimension() const override { return dimension_; }
  std::string name() const override { return "sidecar:" + model_name_; }

  SchemaRepresentations encode(const EncodeRequest& request) const override;
  Vector sentence_embed(std::string_view text) const override;
  PosTagging pos_tag(std::span<const std::string> tokens) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t dimension_ = 0;
  std::string model_name_;
};

}  // namespace skelsql
