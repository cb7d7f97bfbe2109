#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "skelsql/encoder.hpp"
#include "skelsql/error.hpp"

namespace skelsql {
namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void normalize_in_place(Vector& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

void add_scaled(Vector& acc, const Vector& v, double scale) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += scale * v[k];
}

std::set<std::string> trigram_set(std::string_view text) {
  auto grams = character_trigrams(text);
  return {grams.begin(), grams.end()};
}

const std::set<std::string, std::less<>>& function_words() {
  static const std::set<std::string, std::less<>> kWords = {
      "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
      "be", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
      "does", "doing", "down", "during", "each", "either", "ever", "every", "few", "for", "from", "further",
      "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how", "i", "if", "in",
      "into", "is", "it", "its", "just", "least", "less", "many", "me", "more", "most", "much", "my",
      "neither", "no", "nor", "not", "of", "off", "on", "once", "only", "or", "other", "our", "out", "over",
      "own", "per", "same", "she", "should", "show", "so", "some", "such", "than", "that", "the", "their",
      "them", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
      "up", "very", "was", "we", "were", "what", "when", "where", "whether", "which", "while", "who", "whom",
      "whose", "why", "will", "with", "would", "you", "your", "list", "find", "give", "return", "tell",
      "display", "please", "among", "within", "without", "whereas", "ordered", "sorted", "descending",
      "ascending", "order", "number", "count", "total", "average", "maximum", "minimum", "max", "min", "sum",
      "largest", "smallest", "highest", "lowest", "greater", "larger", "smaller", "fewer", "older", "younger",
      "distinct", "different", "unique", "respectively", "'s", "s", "t",
  };
  return kWords;
}

bool is_numeral(std::string_view token) {
  bool digit = false;
  for (char c : token) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '+' && c != '%') {
      return false;
    }
  }
  return digit && std::isdigit(static_cast<unsigned char>(token.back()));
}

}  // namespace

Vector hash_embedding(std::string_view key, std::size_t dimension, std::uint64_t seed) {
  std::string seed_bytes(sizeof(seed), '\0');
  for (std::size_t b = 0; b < sizeof(seed); ++b) seed_bytes[b] = static_cast<char>((seed >> (8 * b)) & 0xff);
  std::uint64_t state = fnv1a(key, fnv1a(seed_bytes));

  Vector v(dimension);
  for (double& x : v) {
    const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    x = 2.0 * unit - 1.0;
  }
  normalize_in_place(v);
  return v;
}

std::vector<std::string> character_trigrams(std::string_view text) {
  std::vector<std::string> grams;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (word.size() < 3) {
      grams.push_back(word);
    } else {
      for (std::size_t i = 0; i + 3 <= word.size(); ++i) grams.push_back(word.substr(i, 3));
    }
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

std::size_t trigram_overlap(std::string_view a, std::string_view b) {
  const auto ga = character_trigrams(a);
  const auto gb = character_trigrams(b);
  std::vector<std::string> shared;
  std::set_intersection(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(shared));
  return shared.size();
}

PosTag reference_pos_tag(std::string_view token) {
  if (token.empty()) return PosTag::kOther;
  if (is_numeral(token)) return PosTag::kNumber;
  const bool has_alnum = std::any_of(token.begin(), token.end(),
                                     [](unsigned char c) { return std::isalnum(c) != 0; });
  if (!has_alnum) return PosTag::kOther;
  if (function_words().contains(token)) return PosTag::kOther;
  return PosTag::kNoun;
}

ReferenceEncoder::ReferenceEncoder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) throw Error(ErrorCode::kPreconditionViolation, "encoder dimension must be positive");
}

SchemaRepresentations ReferenceEncoder::encode(const EncodeRequest& request) const {
  validate_request(request);

  std::vector<Vector> token_vectors;
  token_vectors.reserve(request.question_tokens.size());
  for (const auto& q : request.question_tokens) token_vectors.push_back(hash_embedding("q:" + q, dimension_, seed_));

  SchemaRepresentations out;
  out.dimension = dimension_;
  out.masked_index = request.masked_question_index;
  out.vectors.reserve(request.schema_tokens.size());

  for (const auto& item : request.schema_tokens) {
    Vector h(dimension_, 0.0);
    for (const auto& gram : trigram_set(item)) add_scaled(h, hash_embedding("g:" + gram, dimension_, seed_), 1.0);
    normalize_in_place(h);
    for (std::size_t i = 0; i < request.question_tokens.size(); ++i) {
      if (request.masked_question_index == i) continue;
      const auto overlap = trigram_overlap(request.question_tokens[i], item);
      if (overlap > 0) add_scaled(h, token_vectors[i], static_cast<double>(overlap));
    }
    out.vectors.push_back(std::move(h));
  }
  return out;
}

Vector ReferenceEncoder::sentence_embed(std::string_view text) const {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(w));
  }
  if (words.empty()) throw Error(ErrorCode::kPreconditionViolation, "sentence_embed on empty text");

  // Unigrams carry the vocabulary, bigrams the word order.
  Vector v(dimension_, 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    add_scaled(v, hash_embedding("u:" + words[i], dimension_, seed_), 1.0);
    if (i + 1 < words.size()) add_scaled(v, hash_embedding("b:" + words[i] + ' ' + words[i + 1], dimension_, seed_), 1.0);
  }
  normalize_in_place(v);
  return v;
}

PosTagging ReferenceEncoder::pos_tag(std::span<const std::string> tokens) const {
  if (tokens.empty()) throw Error(ErrorCode::kPreconditionViolation, "pos_tag on empty token list");
  PosTagging out;
  out.tags.reserve(tokens.size());
  for (const auto& t : tokens) out.tags.push_back(reference_pos_tag(t));
  return out;
}

}  // namespace skelsql
