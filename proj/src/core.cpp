// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/core.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "rwlsh/error.hpp"

namespace rwlsh {

std::string_view category_name(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid_argument";
    case ErrorCategory::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCategory::kOutOfRange: return "out_of_range";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kFormat: return "format";
    case ErrorCategory::kCorruption: return "corruption";
    case ErrorCategory::kVersionMismatch: return "version_mismatch";
    case ErrorCategory::kResourceExhausted: return "resource_exhausted";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return 2;
    case ErrorCategory::kDimensionMismatch: return 3;
    case ErrorCategory::kOutOfRange: return 4;
    case ErrorCategory::kIo: return 5;
    case ErrorCategory::kFormat: return 6;
    case ErrorCategory::kCorruption: return 7;
    case ErrorCategory::kVersionMismatch: return 8;
    case ErrorCategory::kResourceExhausted: return 9;
  }
  return 1;
}

RawDataset::RawDataset(std::size_t dim, std::vector<double> values)
    : dim_(dim), values_(std::move(values)) {
  require(dim_ > 0, ErrorCategory::kInvalidArgument, "dataset dimension must be positive");
  require(!values_.empty(), ErrorCategory::kInvalidArgument, "dataset is empty");
  require(values_.size() % dim_ == 0, ErrorCategory::kDimensionMismatch,
          "value count is not a multiple of the dimension");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]), ErrorCategory::kInvalidArgument,
            "non-finite coordinate at point " + std::to_string(i / dim_) + ", dimension " +
                std::to_string(i % dim_));
  }
}

RawDataset RawDataset::from_rows(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), ErrorCategory::kInvalidArgument, "dataset is empty");
  const std::size_t dim = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    require(row.size() == dim, ErrorCategory::kDimensionMismatch, "rows disagree on dimension");
    values.insert(values.end(), row.begin(), row.end());
  }
  return RawDataset(dim, std::move(values));
}

NormalizedDataset::NormalizedDataset(std::size_t dim, std::vector<Coord> coords,
                                     NormalizationParams params)
    : dim_(dim), coords_(std::move(coords)), params_(std::move(params)), universe_caps_(dim, 0) {
  require(dim_ > 0 && !coords_.empty() && coords_.size() % dim_ == 0,
          ErrorCategory::kInvalidArgument, "malformed normalized dataset");
  require(params_.shift.size() == dim_, ErrorCategory::kDimensionMismatch,
          "normalization shift has wrong dimension");
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const Coord c = coords_[i];
    require(c >= 0 && c % 2 == 0, ErrorCategory::kInvalidArgument,
            "normalized coordinates must be nonnegative even integers");
    universe_caps_[i % dim_] = std::max(universe_caps_[i % dim_], c);
  }
  universe_ = *std::max_element(universe_caps_.begin(), universe_caps_.end());
}

Distance l1_distance(std::span<const Coord> u, std::span<const Coord> v) {
  require(u.size() == v.size(), ErrorCategory::kDimensionMismatch,
          "l1_distance: dimension mismatch");
  Distance sum = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::int64_t diff = static_cast<std::int64_t>(u[i]) - v[i];
    sum += static_cast<Distance>(diff < 0 ? -diff : diff);
  }
  return sum;
}

std::int64_t round_to_even(double value) noexcept {
  return 2 * static_cast<std::int64_t>(std::floor(value / 2.0 + 0.5));
}

NormalizedDataset normalize(const RawDataset& raw, const NormalizeOptions& options) {
  require(raw.size() > 0, ErrorCategory::kInvalidArgument, "normalize: empty dataset");
  const std::size_t dim = raw.dim();
  const std::int64_t cap = options.scale_cap - (options.scale_cap % 2);
  require(cap >= 2 && cap <= std::numeric_limits<Coord>::max(), ErrorCategory::kInvalidArgument,
          "normalize: scale cap out of range");

  NormalizationParams params;
  params.shift.assign(dim, 0.0);
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const auto pt = raw.point(p);
    for (std::size_t i = 0; i < dim; ++i) {
      params.shift[i] = std::max(params.shift[i], -pt[i]);
    }
  }

  double max_shifted = 0.0;
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const auto pt = raw.point(p);
    for (std::size_t i = 0; i < dim; ++i) {
      max_shifted = std::max(max_shifted, pt[i] + params.shift[i]);
    }
  }

  if (options.scale) {
    require(std::isfinite(*options.scale) && *options.scale > 0.0, ErrorCategory::kInvalidArgument,
            "normalize: scale must be positive");
    params.scale = *options.scale;
    require(max_shifted * params.scale <= static_cast<double>(cap) + 1.0,
            ErrorCategory::kOutOfRange, "normalize: forced scale exceeds the scale cap");
  } else if (max_shifted == 0.0) {
    params.scale = static_cast<double>(cap);
  } else {
    const double even = 2.0 * std::floor(static_cast<double>(cap) / (2.0 * max_shifted));
    // Below 2 no even integer fits; fall back to the exact fractional scale.
    params.scale = even >= 2.0 ? even : static_cast<double>(cap) / max_shifted;
  }

  std::vector<Coord> coords(raw.size() * dim);
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const auto pt = raw.point(p);
    for (std::size_t i = 0; i < dim; ++i) {
      const std::int64_t v = round_to_even((pt[i] + params.shift[i]) * params.scale);
      coords[p * dim + i] = static_cast<Coord>(std::clamp<std::int64_t>(v, 0, cap));
    }
  }
  return NormalizedDataset(dim, std::move(coords), std::move(params));
}

std::vector<Coord> normalize_point(const NormalizationParams& params, std::span<const double> point) {
  require(point.size() == params.shift.size(), ErrorCategory::kDimensionMismatch,
          "query dimension " + std::to_string(point.size()) + " does not match dataset dimension " +
              std::to_string(params.shift.size()));
  std::vector<Coord> out(point.size());
  constexpr double kLimit = static_cast<double>(std::numeric_limits<Coord>::max() - 1);
  for (std::size_t i = 0; i < point.size(); ++i) {
    require(std::isfinite(point[i]), ErrorCategory::kInvalidArgument, "non-finite query coordinate");
    const double scaled = std::clamp((point[i] + params.shift[i]) * params.scale, -kLimit, kLimit);
    out[i] = static_cast<Coord>(round_to_even(scaled));
  }
  return out;
}

namespace {

void check_knn_args(const NormalizedDataset& data, std::span<const Coord> query, std::size_t k) {
  require(k >= 1 && k <= data.size(), ErrorCategory::kInvalidArgument,
          "brute_force_knn: k must be in [1, n]");
  require(query.size() == data.dim(), ErrorCategory::kDimensionMismatch,
          "brute_force_knn: query dimension mismatch");
}

struct NeighborWorse {
  bool operator()(const Neighbor& a, const Neighbor& b) const noexcept { return neighbor_less(a, b); }
};

// Bounded max-heap keeping the k best under (distance, id).
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}
  void offer(const Neighbor& n) {
    if (heap_.size() < k_) {
      heap_.push(n);
    } else if (neighbor_less(n, heap_.top())) {
      heap_.pop();
      heap_.push(n);
    }
  }
  std::vector<Neighbor> drain() {
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    return out;
  }

 private:
  std::size_t k_;
  std::priority_queue<Neighbor, std::vector<Neighbor>, NeighborWorse> heap_;
};

std::vector<Neighbor> knn_single_thread(const NormalizedDataset& data, std::span<const Coord> query,
                                        std::size_t k) {
  TopK top(k);
  for (std::size_t p = 0; p < data.size(); ++p) {
    top.offer({static_cast<PointId>(p), l1_distance(query, data.point(p))});
  }
  auto out = top.drain();
  std::sort(out.begin(), out.end(), neighbor_less);
  return out;
}

}  // namespace

std::vector<Neighbor> brute_force_knn(const NormalizedDataset& data, std::span<const Coord> query,
                                      std::size_t k) {
  check_knn_args(data, query, k);
  const auto n = static_cast<std::int64_t>(data.size());
  std::vector<std::vector<Neighbor>> partial(static_cast<std::size_t>(omp_get_max_threads()));

#pragma omp parallel
  {
    TopK top(k);
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < n; ++p) {
      top.offer({static_cast<PointId>(p), l1_distance(query, data.point(static_cast<std::size_t>(p)))});
    }
    partial[static_cast<std::size_t>(omp_get_thread_num())] = top.drain();
  }

  std::vector<Neighbor> merged;
  for (auto& part : partial) {
    merged.insert(merged.end(), part.begin(), part.end());
  }
  std::partial_sort(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(k), merged.end(),
                    neighbor_less);
  merged.resize(k);
  return merged;
}

std::vector<std::vector<Neighbor>> brute_force_knn_batch(const NormalizedDataset& data,
                                                         const std::vector<std::vector<Coord>>& queries,
                                                         std::size_t k) {
  for (const auto& q : queries) {
    check_knn_args(data, q, k);
  }
  std::vector<std::vector<Neighbor>> out(queries.size());
  const auto count = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = knn_single_thread(data, queries[static_cast<std::size_t>(i)], k);
  }
  return out;
}

namespace reference {

std::vector<Neighbor> brute_force_knn(const NormalizedDataset& data, std::span<const Coord> query,
                                      std::size_t k) {
  check_knn_args(data, query, k);
  std::vector<Neighbor> all(data.size());
  for (std::size_t p = 0; p < data.size(); ++p) {
    all[p] = {static_cast<PointId>(p), l1_distance(query, data.point(p))};
  }
  std::sort(all.begin(), all.end(), neighbor_less);
  all.resize(k);
  return all;
}

}  // namespace reference

}  // namespace rwlsh
