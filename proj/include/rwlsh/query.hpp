// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rwlsh/core.hpp"
#include "rwlsh/index.hpp"
#include "rwlsh/multiprobe.hpp"

namespace rwlsh {

enum class SequenceMode : std::uint8_t {
  kSingle,     // epicenter bucket only
  kOptimal,    // exact success probability at the model distance
  kSubsetSum,  // squared face distances, per query
  kTemplate,   // query-independent template
};

std::string_view mode_name(SequenceMode mode) noexcept;
/// Accepts "single", "optimal", "subset_sum" and "template".
SequenceMode parse_mode(std::string_view text);

struct QueryParams {
  std::size_t k = 50;
  std::size_t probes = 100;  // T; ignored in single mode
  SequenceMode mode = SequenceMode::kTemplate;
  /// Stop admitting new candidates once this many were collected.
  std::optional<std::size_t> max_candidates;
  /// Distance the optimal mode ranks buckets for. Defaults to W.
  std::optional<double> model_distance;
};

void validate(const QueryParams& params);

struct QueryStats {
  std::size_t buckets_probed = 0;
  std::size_t bucket_entries = 0;  // ids read from probed slots, with repeats
  std::size_t candidates = 0;      // distinct ids whose distance was computed
  std::size_t dedup_hits = 0;      // ids skipped because already seen
  bool truncated = false;          // max_candidates was reached
  std::uint64_t elapsed_ns = 0;
};

struct QueryResult {
  std::vector<Neighbor> neighbors;  // at most k, sorted by (distance, id)
  QueryStats stats;
};

/// Normalizes q with the dataset's stored parameters, then searches.
QueryResult knn_query(const HashIndex& index, std::span<const double> raw_query, const QueryParams& params);
/// Query already in normalized coordinates. For the random-walk family every
/// coordinate must be even and within the walk-table universe of its dimension.
QueryResult knn_query_normalized(const HashIndex& index, std::span<const Coord> query, const QueryParams& params);

/// Parallel over queries; each result equals the single-query call.
std::vector<QueryResult> knn_query_batch(const HashIndex& index, const std::vector<std::vector<Coord>>& queries,
                                         const QueryParams& params);

namespace reference {
std::vector<QueryResult> knn_query_batch(const HashIndex& index, const std::vector<std::vector<Coord>>& queries,
                                         const QueryParams& params);
}  // namespace reference

/// |R intersect R*| / |R*|, by point id. Dividing by the oracle size keeps a
/// short result from scoring above its true hit rate.
double recall(std::span<const Neighbor> result, std::span<const Neighbor> truth);

struct RatioResult {
  double ratio = 1.0;
  std::size_t terms = 0;          // positions averaged
  std::size_t excluded_zero = 0;  // truth distance 0 but returned distance > 0
  bool short_result = false;      // fewer results than truth entries
};

/// Mean of positionwise distance ratios over the returned prefix. A zero true
/// distance contributes 1 when matched by a zero and is excluded otherwise.
RatioResult overall_ratio(std::span<const Neighbor> result, std::span<const Neighbor> truth);

}  // namespace rwlsh
