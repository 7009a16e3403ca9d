// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/query.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <unordered_set>

#include "rwlsh/error.hpp"

namespace rwlsh {

namespace {

// Probing plan shared by all queries of one call.
struct Plan {
  const HashIndex* index = nullptr;
  SequenceMode mode = SequenceMode::kSingle;
  std::size_t probes = 0;
  std::optional<Template> owned;  // set when T exceeds the stored template
  std::optional<LandingModel> model;

  const Template& tmpl() const { return owned ? *owned : index->probe_template(); }
};

Plan make_plan(const HashIndex& index, const QueryParams& params) {
  validate(params);
  const auto& config = index.config();
  Plan plan;
  plan.index = &index;
  plan.mode = params.mode;
  plan.probes = params.mode == SequenceMode::kSingle ? 0 : params.probes;
  if (plan.mode == SequenceMode::kTemplate) {
    if (index.probe_template().length() < plan.probes) {
      plan.owned = build_template(config.functions, config.width, plan.probes);
    }
  } else if (plan.mode == SequenceMode::kOptimal) {
    plan.model.emplace(config.kind, params.model_distance.value_or(config.width));
  }
  return plan;
}

ProbingSequence sequence_for(const Plan& plan, const EpicenterGeometry& geometry) {
  switch (plan.mode) {
    case SequenceMode::kSingle:
      return ProbingSequence{{PerturbationVector(geometry.functions(), 0)}, {0.0}};
    case SequenceMode::kOptimal:
      return optimal_sequence(*plan.model, geometry, plan.probes);
    case SequenceMode::kSubsetSum:
      return subset_sum_sequence(geometry, plan.probes);
    case SequenceMode::kTemplate:
      return instantiate(plan.tmpl(), geometry, plan.probes);
  }
  return {};
}

void check_query(const HashIndex& index, std::span<const Coord> query) {
  const auto& data = index.data();
  require(query.size() == data.dim(), ErrorCategory::kDimensionMismatch,
          "query dimension " + std::to_string(query.size()) + " does not match dataset dimension " +
              std::to_string(data.dim()));
  if (index.config().kind != HashFamilyKind::kRandomWalk) {
    return;
  }
  const auto& caps = index.walks()->caps();
  for (std::size_t i = 0; i < query.size(); ++i) {
    require(query[i] >= 0 && query[i] <= caps[i], ErrorCategory::kOutOfRange,
            "query coordinate " + std::to_string(query[i]) + " in dimension " + std::to_string(i) +
                " lies outside the walk-table universe [0, " + std::to_string(caps[i]) + "]");
  }
}

QueryResult run_query(const HashIndex& index, const Plan& plan, std::span<const Coord> query, const QueryParams& params,
                      std::vector<std::uint64_t>& visited) {
  const auto start = std::chrono::steady_clock::now();
  check_query(index, query);
  const auto& data = index.data();
  QueryResult result;
  auto& stats = result.stats;
  std::fill(visited.begin(), visited.end(), 0);
  std::vector<PointId> candidates;
  const std::size_t cap = params.max_candidates.value_or(data.size());

  BucketKey probe_key;
  for (std::size_t t = 0; t < index.tables().size() && !stats.truncated; ++t) {
    const auto projection = project(index.tables()[t].family, query);
    const auto sequence = sequence_for(plan, projection.geometry);
    for (const auto& delta : sequence.probes) {
      probe_key = projection.key;
      for (std::size_t j = 0; j < delta.size(); ++j) {
        probe_key[j] += delta[j];
      }
      const auto bucket = probe_bucket(index, t, probe_key);
      ++stats.buckets_probed;
      stats.bucket_entries += bucket.size();
      for (PointId id : bucket) {
        auto& word = visited[id >> 6];
        const std::uint64_t bit = std::uint64_t{1} << (id & 63);
        if (word & bit) {
          ++stats.dedup_hits;
          continue;
        }
        if (candidates.size() >= cap) {
          stats.truncated = true;
          break;
        }
        word |= bit;
        candidates.push_back(id);
      }
      if (stats.truncated) break;
    }
  }

  stats.candidates = candidates.size();
  result.neighbors.reserve(candidates.size());
  for (PointId id : candidates) {
    result.neighbors.push_back({id, l1_distance(query, data.point(id))});
  }
  const std::size_t keep = std::min(params.k, result.neighbors.size());
  std::partial_sort(result.neighbors.begin(), result.neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.neighbors.end(), neighbor_less);
  result.neighbors.resize(keep);
  stats.elapsed_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
  return result;
}

std::vector<std::uint64_t> visited_for(const HashIndex& index) {
  return std::vector<std::uint64_t>((index.data().size() + 63) / 64);
}

}  // namespace

std::string_view mode_name(SequenceMode mode) noexcept {
  switch (mode) {
    case SequenceMode::kSingle:
      return "single";
    case SequenceMode::kOptimal:
      return "optimal";
    case SequenceMode::kSubsetSum:
      return "subset_sum";
    case SequenceMode::kTemplate:
      return "template";
  }
  return "unknown";
}

SequenceMode parse_mode(std::string_view text) {
  for (auto mode : {SequenceMode::kSingle, SequenceMode::kOptimal, SequenceMode::kSubsetSum, SequenceMode::kTemplate}) {
    if (text == mode_name(mode)) return mode;
  }
  fail(ErrorCategory::kInvalidArgument, "unknown sequence mode '" + std::string(text) + "'");
}

void validate(const QueryParams& params) {
  require(params.k >= 1, ErrorCategory::kInvalidArgument, "k must be at least 1");
  if (params.max_candidates) {
    require(*params.max_candidates >= 1, ErrorCategory::kInvalidArgument, "max_candidates must be at least 1");
  }
  if (params.model_distance) {
    require(std::isfinite(*params.model_distance) && *params.model_distance >= 0.0, ErrorCategory::kInvalidArgument,
            "model distance must be finite and nonnegative");
  }
}

QueryResult knn_query(const HashIndex& index, std::span<const double> raw_query, const QueryParams& params) {
  const auto query = normalize_point(index.data().params(), raw_query);
  return knn_query_normalized(index, query, params);
}

QueryResult knn_query_normalized(const HashIndex& index, std::span<const Coord> query, const QueryParams& params) {
  const Plan plan = make_plan(index, params);
  auto visited = visited_for(index);
  return run_query(index, plan, query, params, visited);
}

std::vector<QueryResult> knn_query_batch(const HashIndex& index, const std::vector<std::vector<Coord>>& queries,
                                         const QueryParams& params) {
  const Plan plan = make_plan(index, params);
  std::vector<QueryResult> results(queries.size());
  const auto count = static_cast<std::int64_t>(queries.size());
  std::exception_ptr error;
#pragma omp parallel
  {
    auto visited = visited_for(index);
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        results[static_cast<std::size_t>(i)] = run_query(index, plan, queries[static_cast<std::size_t>(i)], params,
                                                         visited);
      } catch (...) {
#pragma omp critical(rwlsh_query_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return results;
}

namespace reference {
std::vector<QueryResult> knn_query_batch(const HashIndex& index, const std::vector<std::vector<Coord>>& queries,
                                         const QueryParams& params) {
  const Plan plan = make_plan(index, params);
  auto visited = visited_for(index);
  std::vector<QueryResult> results;
  results.reserve(queries.size());
  for (const auto& q : queries) {
    results.push_back(run_query(index, plan, q, params, visited));
  }
  return results;
}
}  // namespace reference

double recall(std::span<const Neighbor> result, std::span<const Neighbor> truth) {
  if (truth.empty()) return 1.0;
  std::unordered_set<PointId> wanted;
  for (const auto& n : truth) wanted.insert(n.id);
  std::size_t hits = 0;
  for (const auto& n : result) hits += wanted.erase(n.id);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

RatioResult overall_ratio(std::span<const Neighbor> result, std::span<const Neighbor> truth) {
  RatioResult out;
  out.short_result = result.size() < truth.size();
  const std::size_t n = std::min(result.size(), truth.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i].distance == 0) {
      if (result[i].distance == 0) {
        sum += 1.0;
        ++out.terms;
      } else {
        ++out.excluded_zero;
      }
      continue;
    }
    sum += static_cast<double>(result[i].distance) / static_cast<double>(truth[i].distance);
    ++out.terms;
  }
  out.ratio = out.terms == 0 ? 1.0 : sum / static_cast<double>(out.terms);
  return out;
}

}  // namespace rwlsh
