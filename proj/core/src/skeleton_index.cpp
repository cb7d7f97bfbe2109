#include "skelsql/skeleton_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>

#include <zlib.h>

#include "skelsql/error.hpp"

namespace skelsql {
namespace {

constexpr char kMagic[4] = {'S', 'K', 'I', 'X'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) out_.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xffu));
  }
  void f32(float value) { le(std::bit_cast<std::uint32_t>(value)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) u |= static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + b]) << (8 * b);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kCorruptIndex, "index file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large indexes.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

double similarity(std::span<const double> query, double query_norm, const std::vector<float>& v) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += query[k] * static_cast<double>(v[k]);
  return s / query_norm;
}

}  // namespace

IndexEntry make_entry(std::uint64_t example_id, std::span<const double> v, std::string skeleton_text) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteInput, "index vector has a non-finite entry");
    sq += x * x;
  }
  if (sq == 0.0) throw Error(ErrorCode::kPreconditionViolation, "cannot index a zero vector");
  const double n = std::sqrt(sq);
  IndexEntry e{example_id, {}, std::move(skeleton_text)};
  e.vector.reserve(v.size());
  for (double x : v) e.vector.push_back(static_cast<float>(x / n));
  return e;
}

SkeletonIndex::SkeletonIndex() : mutex_(std::make_unique<std::shared_mutex>()) {}
SkeletonIndex::SkeletonIndex(SkeletonIndex&&) noexcept = default;
SkeletonIndex& SkeletonIndex::operator=(SkeletonIndex&&) noexcept = default;
SkeletonIndex::~SkeletonIndex() = default;

void SkeletonIndex::add(IndexEntry entry) {
  std::unique_lock lock(*mutex_);
  if (entry.vector.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty index vector");
  if (!entries_.empty() && entry.vector.size() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch, "vector of dimension " + std::to_string(entry.vector.size()) +
                                                   " added to index of dimension " + std::to_string(dimension_));
  }
  double sq = 0.0;
  for (float x : entry.vector) sq += static_cast<double>(x) * x;
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
    throw Error(ErrorCode::kPreconditionViolation, "index vectors must be unit norm (use make_entry)");
  }
  dimension_ = entry.vector.size();
  entries_.push_back(std::move(entry));
}

std::vector<Neighbor> SkeletonIndex::search_knn(std::span<const double> query, std::size_t k) const {
  return search_knn(query, k, nullptr);
}

std::vector<Neighbor> SkeletonIndex::search_knn(std::span<const double> query, std::size_t k,
                                                const std::function<bool(std::uint64_t)>& keep) const {
  std::shared_lock lock(*mutex_);
  if (entries_.empty()) throw Error(ErrorCode::kEmptyIndex, "search on an empty index");
  if (k == 0) throw Error(ErrorCode::kPreconditionViolation, "k must be at least 1");
  if (query.size() != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch, "query of dimension " + std::to_string(query.size()) +
                                                   " against index of dimension " + std::to_string(dimension_));
  }
  double sq = 0.0;
  for (double x : query) sq += x * x;
  const double query_norm = std::sqrt(sq);
  if (!(query_norm > 0.0) || !std::isfinite(query_norm)) {
    throw Error(ErrorCode::kPreconditionViolation, "query must be a finite non-zero vector");
  }

  std::vector<Neighbor> all;
  all.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (keep && !keep(e.example_id)) continue;
    all.push_back({e.example_id, similarity(query, query_norm, e.vector)});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.example_id < b.example_id;
  };
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), better);
  all.resize(n);
  return all;
}

std::size_t SkeletonIndex::size() const {
  std::shared_lock lock(*mutex_);
  return entries_.size();
}

std::size_t SkeletonIndex::dimension() const {
  std::shared_lock lock(*mutex_);
  return dimension_;
}

IndexEntry SkeletonIndex::entry(std::uint64_t example_id) const {
  std::shared_lock lock(*mutex_);
  for (const auto& e : entries_) {
    if (e.example_id == example_id) return e;
  }
  throw Error(ErrorCode::kPreconditionViolation, "no index entry with id " + std::to_string(example_id));
}

std::vector<std::uint8_t> SkeletonIndex::serialize() const {
  std::shared_lock lock(*mutex_);
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint8_t>(kFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(dimension_));
  w.le<std::uint64_t>(entries_.size());
  for (const auto& e : entries_) {
    w.le<std::uint64_t>(e.example_id);
    for (float x : e.vector) w.f32(x);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(e.skeleton_text.size()));
    w.bytes(e.skeleton_text.data(), e.skeleton_text.size());
  }
  const std::uint32_t crc = crc32_of(w.buffer());
  w.le<std::uint32_t>(crc);
  return std::move(w.buffer());
}

SkeletonIndex SkeletonIndex::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 1 + 4 + 8 + 4) throw Error(ErrorCode::kCorruptIndex, "index file is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw Error(ErrorCode::kCorruptIndex, "bad magic bytes");
  const std::uint8_t version = bytes[sizeof(kMagic)];
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "index format version " + std::to_string(version) + ", expected " + std::to_string(kFormatVersion));
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (crc32_of(body) != trailer.le<std::uint32_t>()) throw Error(ErrorCode::kCorruptIndex, "checksum mismatch");

  Reader r(body);
  r.text(sizeof(kMagic));
  r.le<std::uint8_t>();
  const auto dimension = r.le<std::uint32_t>();
  const auto count = r.le<std::uint64_t>();

  SkeletonIndex index;
  if (count > 0) index.dimension_ = dimension;
  for (std::uint64_t n = 0; n < count; ++n) {
    IndexEntry e;
    e.example_id = r.le<std::uint64_t>();
    e.vector.resize(dimension);
    for (auto& x : e.vector) x = r.f32();
    e.skeleton_text = r.text(r.le<std::uint32_t>());
    // Restored verbatim; add() would re-check the norm.
    index.entries_.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kCorruptIndex, "trailing bytes after last entry");
  return index;
}

void SkeletonIndex::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

SkeletonIndex SkeletonIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace skelsql
