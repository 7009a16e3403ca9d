// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rwlsh {

/// Normalized coordinate: a nonnegative even integer for stored points.
/// Normalized queries may leave the data range, hence the signed type.
using Coord = std::int32_t;
using PointId = std::uint32_t;
using Distance = std::uint64_t;

/// Row-major real-valued point set as read from disk.
class RawDataset {
 public:
  RawDataset() = default;
  /// Throws kInvalidArgument on empty input, ragged rows or non-finite values.
  RawDataset(std::size_t dim, std::vector<double> values);
  static RawDataset from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct NormalizationParams {
  std::vector<double> shift;  // a_i >= 0, added before scaling
  double scale = 1.0;         // c

  bool operator==(const NormalizationParams&) const = default;
};

struct NormalizeOptions {
  /// Largest allowed normalized coordinate. The default keeps every walk
  /// prefix sum representable as a signed 16-bit table entry.
  std::int64_t scale_cap = kDefaultScaleCap;
  /// Use this scale instead of choosing one from the cap.
  std::optional<double> scale;

  static constexpr std::int64_t kDefaultScaleCap = 32766;
};

/// Points with nonnegative even integer coordinates plus the transform that
/// produced them.
class NormalizedDataset {
 public:
  NormalizedDataset() = default;
  /// Validates parity and sign of every coordinate and derives the per-dimension
  /// universe caps.
  NormalizedDataset(std::size_t dim, std::vector<Coord> coords, NormalizationParams params);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const Coord> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<Coord>& coords() const noexcept { return coords_; }
  const NormalizationParams& params() const noexcept { return params_; }
  /// U_i: the largest coordinate seen in dimension i.
  const std::vector<Coord>& universe_caps() const noexcept { return universe_caps_; }
  /// U = max_i U_i.
  Coord universe() const noexcept { return universe_; }

 private:
  std::size_t dim_ = 0;
  std::vector<Coord> coords_;
  NormalizationParams params_;
  std::vector<Coord> universe_caps_;
  Coord universe_ = 0;
};

struct Neighbor {
  PointId id = 0;
  Distance distance = 0;

  bool operator==(const Neighbor&) const = default;
};

/// Strict (distance, id) ordering used by every ranked list in the library.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) noexcept {
  return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
}

Distance l1_distance(std::span<const Coord> u, std::span<const Coord> v);

/// Nearest even integer; exact odd integers (the ties) round up.
std::int64_t round_to_even(double value) noexcept;

NormalizedDataset normalize(const RawDataset& raw, const NormalizeOptions& options = {});

/// Applies stored parameters to one point. No range check: the caller decides
/// whether out-of-universe coordinates are acceptable.
std::vector<Coord> normalize_point(const NormalizationParams& params, std::span<const double> point);

/// Exact k nearest neighbors under L1, sorted by (distance, id). Parallel over
/// point blocks; output does not depend on the thread count.
std::vector<Neighbor> brute_force_knn(const NormalizedDataset& data, std::span<const Coord> query,
                                      std::size_t k);

/// One exact k-NN list per query, parallel over queries.
std::vector<std::vector<Neighbor>> brute_force_knn_batch(const NormalizedDataset& data,
                                                         const std::vector<std::vector<Coord>>& queries,
                                                         std::size_t k);

namespace reference {

/// Single-threaded full sort. Kept as the baseline the parallel kernel is
/// tested and benchmarked against.
std::vector<Neighbor> brute_force_knn(const NormalizedDataset& data, std::span<const Coord> query,
                                      std::size_t k);

}  // namespace reference

}  // namespace rwlsh
