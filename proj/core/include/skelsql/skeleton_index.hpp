#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace skelsql {

struct IndexEntry {
  std::uint64_t example_id = 0;
  std::vector<float> vector;  // unit norm
  std::string skeleton_text;
};

struct Neighbor {
  std::uint64_t example_id = 0;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Normalizes `v` and stores it as float32, the precision kept by the index.
IndexEntry make_entry(std::uint64_t example_id, std::span<const double> v, std::string skeleton_text);

/// Exact cosine k-NN over skeleton embeddings.
///
/// Search is a brute-force scan. Results are ordered by decreasing
/// similarity; equal similarities go to the lower example id. Many readers
/// may search while no writer holds the index.
class SkeletonIndex {
 public:
  static constexpr std::uint8_t kFormatVersion = 1;

  SkeletonIndex();
  SkeletonIndex(SkeletonIndex&&) noexcept;
  SkeletonIndex& operator=(SkeletonIndex&&) noexcept;
  ~SkeletonIndex();

  /// The first insert fixes the dimension.
  void add(IndexEntry entry);

  std::vector<Neighbor> search_knn(std::span<const double> query, std::size_t k) const;

  /// Entries rejected by `keep` are skipped before ranking.
  std::vector<Neighbor> search_knn(std::span<const double> query, std::size_t k,
                                   const std::function<bool(std::uint64_t example_id)>& keep) const;

  std::size_t size() const;
  std::size_t dimension() const;

  /// Throws PreconditionViolation for unknown ids.
  IndexEntry entry(std::uint64_t example_id) const;

  /// Binary layout, little-endian: "SKIX", u8 version, u32 dimension,
  /// u64 count, then per entry u64 id, dimension x f32, u32 byte length +
  /// UTF-8 skeleton text; a trailing CRC32 of everything before it.
  void save(const std::filesystem::path& path) const;
  static SkeletonIndex load(const std::filesystem::path& path);

  std::vector<std::uint8_t> serialize() const;
  static SkeletonIndex deserialize(std::span<const std::uint8_t> bytes);

 private:
  std::unique_ptr<std::shared_mutex> mutex_;
  std::size_t dimension_ = 0;
  std::vector<IndexEntry> entries_;
};

}  // namespace skelsql
