// SPDX-License-Identifier: Apache-2.0

// Probing-sequence generation.
//
// Every bucket in the 3^M neighborhood of the epicenter bucket picks at most
// one face per hash function. Ranking the 2M faces by a per-face cost turns
// "next most likely bucket" into "next smallest valid subset sum", which the
// shift/expand heap enumerates in order while touching O(T) subsets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rwlsh/hash_family.hpp"

namespace rwlsh {

/// Ascending 0-based face ranks.
using RankSubset = std::vector<std::uint32_t>;

/// Emits the empty subset followed by up to T nonempty subsets of ranks, in
/// increasing (sum, ranks-lexicographic) order, skipping subsets that contain
/// both ranks of a partner pair. `costs` must be ascending and nonnegative
/// (+inf allowed); `partner` must be an involution without fixed points.
/// When fewer than T valid subsets exist, all of them are emitted.
std::vector<RankSubset> additive_cost_heap(std::span<const double> costs, std::span<const std::uint32_t> partner,
                                           std::size_t max_subsets);

/// Sum of costs over a subset, accumulated in ascending rank order. The heap
/// uses exactly this to keep ties bit-identical across evaluation paths.
double subset_cost(std::span<const double> costs, const RankSubset& subset) noexcept;

/// The 2M faces of one query, ranked by cost.
struct RankedFaces {
  std::vector<double> costs;            // ascending
  std::vector<std::uint32_t> function;  // owning hash function of each rank
  std::vector<std::int8_t> sign;        // -1 (lower face) or +1 (upper face)
  std::vector<std::uint32_t> partner;   // rank of the other face of the same function

  std::size_t functions() const noexcept { return costs.size() / 2; }
  PerturbationVector to_perturbation(const RankSubset& subset) const;
};

/// Ranks faces by exact log-probability loss relative to the epicenter,
/// c_i(delta) = log p_i(0) - log p_i(delta). Ties break by (function, sign).
RankedFaces rank_faces_by_probability(const LandingModel& model, const EpicenterGeometry& geometry);

/// Ranks faces by distance to the epicenter: the nearer face of each function
/// takes ranks 1..M in increasing distance (ties by function, lower face
/// first) and the farther face takes the complementary rank 2M + 1 - j.
/// Costs are the squared distances.
RankedFaces rank_faces_by_distance(const EpicenterGeometry& geometry);

struct ProbingSequence {
  std::vector<PerturbationVector> probes;  // probes[0] is the all-zero epicenter
  std::vector<double> scores;              // ordering key of each probe

  std::size_t size() const noexcept { return probes.size(); }
};

/// Top-(T+1) buckets by exact success probability.
ProbingSequence optimal_sequence(HashFamilyKind kind, const EpicenterGeometry& geometry, double distance,
                                 std::size_t probes_after_epicenter);
ProbingSequence optimal_sequence(const LandingModel& model, const EpicenterGeometry& geometry,
                                 std::size_t probes_after_epicenter);

/// Top-(T+1) buckets by squared Euclidean distance from the epicenter.
ProbingSequence subset_sum_sequence(const EpicenterGeometry& geometry, std::size_t probes_after_epicenter);

/// ||x(delta)||^2 = sum_i x_i(delta_i)^2.
double subset_sum_score(const EpicenterGeometry& geometry, const PerturbationVector& delta);

/// E[z_j^2] for the j-th smallest (1-based) of the 2M face distances when each
/// lower-face distance is Uniform[0, W].
double expected_squared_face_distance(std::size_t rank, std::size_t functions, double width);

/// Query-independent probing order over face ranks.
struct Template {
  std::size_t functions = 0;
  double width = 0.0;
  std::vector<RankSubset> subsets;      // nonempty, 0-based ranks
  std::vector<double> expected_scores;  // subset sums of E[z_j^2]

  std::size_t length() const noexcept { return subsets.size(); }
  bool operator==(const Template&) const = default;
};

Template build_template(std::size_t functions, double width, std::size_t length);

/// Maps template ranks onto this query's faces and prepends the epicenter.
/// Uses at most `limit` template entries when given.
ProbingSequence instantiate(const Template& tmpl, const EpicenterGeometry& geometry,
                            std::size_t limit = static_cast<std::size_t>(-1));

/// P_T(d): summed success probability over the sequence.
double total_success_prob(HashFamilyKind kind, const EpicenterGeometry& geometry, double distance,
                          const ProbingSequence& sequence);
/// Running sums: out[t] is the success probability of the first t + 1 probes.
std::vector<double> cumulative_success_prob(const LandingModel& model, const EpicenterGeometry& geometry,
                                            const ProbingSequence& sequence);

}  // namespace rwlsh
