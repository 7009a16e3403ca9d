// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/multiprobe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "rwlsh/error.hpp"

namespace rwlsh {

namespace {

struct HeapNode {
  double sum;
  RankSubset ranks;
};

struct NodeAfter {
  bool operator()(const HeapNode& a, const HeapNode& b) const {
    if (a.sum != b.sum) return a.sum > b.sum;
    return std::lexicographical_compare(b.ranks.begin(), b.ranks.end(), a.ranks.begin(), a.ranks.end());
  }
};

bool valid_subset(const RankSubset& subset, std::span<const std::uint32_t> partner) {
  // Ranks are sorted; a partner pair is present iff some partner is in the set.
  for (std::uint32_t r : subset) {
    if (std::binary_search(subset.begin(), subset.end(), partner[r])) {
      return false;
    }
  }
  return true;
}

void check_heap_inputs(std::span<const double> costs, std::span<const std::uint32_t> partner) {
  require(costs.size() == partner.size(), ErrorCategory::kInvalidArgument, "costs and partner map differ in size");
  for (std::size_t j = 0; j < costs.size(); ++j) {
    require(!std::isnan(costs[j]) && costs[j] >= 0.0, ErrorCategory::kInvalidArgument,
            "face costs must be nonnegative");
    require(j == 0 || costs[j - 1] <= costs[j], ErrorCategory::kInvalidArgument, "face costs must be ascending");
    require(partner[j] < partner.size() && partner[j] != j && partner[partner[j]] == j,
            ErrorCategory::kInvalidArgument, "partner map must pair every rank with another");
  }
}

ProbingSequence sequence_from_faces(const RankedFaces& faces, std::size_t probes_after_epicenter) {
  const auto subsets = additive_cost_heap(faces.costs, faces.partner, probes_after_epicenter);
  ProbingSequence seq;
  seq.probes.reserve(subsets.size());
  seq.scores.reserve(subsets.size());
  for (const auto& subset : subsets) {
    seq.probes.push_back(faces.to_perturbation(subset));
    seq.scores.push_back(subset_cost(faces.costs, subset));
  }
  return seq;
}

}  // namespace

double subset_cost(std::span<const double> costs, const RankSubset& subset) noexcept {
  double sum = 0.0;
  for (std::uint32_t r : subset) {
    sum += costs[r];
  }
  return sum;
}

std::vector<RankSubset> additive_cost_heap(std::span<const double> costs, std::span<const std::uint32_t> partner,
                                           std::size_t max_subsets) {
  check_heap_inputs(costs, partner);
  std::vector<RankSubset> out;
  out.emplace_back();
  const auto n = static_cast<std::uint32_t>(costs.size());
  if (n == 0 || max_subsets == 0) {
    return out;
  }

  std::priority_queue<HeapNode, std::vector<HeapNode>, NodeAfter> heap;
  heap.push({costs[0], RankSubset{0}});
  while (!heap.empty() && out.size() <= max_subsets) {
    HeapNode node = heap.top();
    heap.pop();
    const std::uint32_t last = node.ranks.back();
    if (last + 1 < n) {
      RankSubset shifted = node.ranks;
      shifted.back() = last + 1;
      RankSubset expanded = node.ranks;
      expanded.push_back(last + 1);
      const double shifted_sum = subset_cost(costs, shifted);
      const double expanded_sum = subset_cost(costs, expanded);
      heap.push({shifted_sum, std::move(shifted)});
      heap.push({expanded_sum, std::move(expanded)});
    }
    if (valid_subset(node.ranks, partner)) {
      out.push_back(std::move(node.ranks));
    }
  }
  return out;
}

PerturbationVector RankedFaces::to_perturbation(const RankSubset& subset) const {
  PerturbationVector delta(functions(), 0);
  for (std::uint32_t r : subset) {
    delta[function[r]] = sign[r];
  }
  return delta;
}

RankedFaces rank_faces_by_probability(const LandingModel& model, const EpicenterGeometry& geometry) {
  struct Face {
    double cost;
    std::uint32_t function;
    std::int8_t sign;
  };
  const std::size_t m = geometry.functions();
  std::vector<Face> faces;
  faces.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = geometry.x_minus(i);
    const double p0 = model.bucket(x, geometry.width(), 0);
    require(p0 > 0.0, ErrorCategory::kInvalidArgument, "epicenter bucket has zero probability");
    for (int s : {-1, 1}) {
      const double p = model.bucket(x, geometry.width(), s);
      // The heap needs a single peak at the epicenter.
      require(p <= p0 * (1.0 + 1e-12), ErrorCategory::kInvalidArgument,
              "landing probabilities are not unimodal around the epicenter");
      const double cost = p > 0.0 ? std::max(0.0, std::log(p0) - std::log(p)) : std::numeric_limits<double>::infinity();
      faces.push_back({cost, static_cast<std::uint32_t>(i), static_cast<std::int8_t>(s)});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const Face& a, const Face& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.function != b.function) return a.function < b.function;
    return a.sign < b.sign;
  });

  RankedFaces ranked;
  ranked.costs.resize(2 * m);
  ranked.function.resize(2 * m);
  ranked.sign.resize(2 * m);
  ranked.partner.resize(2 * m);
  std::vector<std::uint32_t> first_rank(m, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t r = 0; r < 2 * m; ++r) {
    ranked.costs[r] = faces[r].cost;
    ranked.function[r] = faces[r].function;
    ranked.sign[r] = faces[r].sign;
    auto& seen = first_rank[faces[r].function];
    if (seen == std::numeric_limits<std::uint32_t>::max()) {
      seen = r;
    } else {
      ranked.partner[r] = seen;
      ranked.partner[seen] = r;
    }
  }
  return ranked;
}

RankedFaces rank_faces_by_distance(const EpicenterGeometry& geometry) {
  const std::size_t m = geometry.functions();
  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0U);
  auto near = [&](std::uint32_t i) { return std::min(geometry.x_minus(i), geometry.x_plus(i)); };
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double na = near(a);
    const double nb = near(b);
    return na != nb ? na < nb : a < b;
  });

  RankedFaces ranked;
  ranked.costs.resize(2 * m);
  ranked.function.resize(2 * m);
  ranked.sign.resize(2 * m);
  ranked.partner.resize(2 * m);
  for (std::uint32_t j = 0; j < m; ++j) {
    const std::uint32_t i = order[j];
    const bool lower_is_near = geometry.x_minus(i) <= geometry.x_plus(i);
    const std::int8_t near_sign = lower_is_near ? -1 : 1;
    const std::uint32_t far_rank = static_cast<std::uint32_t>(2 * m - 1 - j);
    ranked.function[j] = i;
    ranked.sign[j] = near_sign;
    ranked.costs[j] = near(i) * near(i);
    ranked.function[far_rank] = i;
    ranked.sign[far_rank] = static_cast<std::int8_t>(-near_sign);
    const double far = geometry.width() - near(i);
    ranked.costs[far_rank] = far * far;
    ranked.partner[j] = far_rank;
    ranked.partner[far_rank] = j;
  }
  return ranked;
}

ProbingSequence optimal_sequence(const LandingModel& model, const EpicenterGeometry& geometry,
                                 std::size_t probes_after_epicenter) {
  return sequence_from_faces(rank_faces_by_probability(model, geometry), probes_after_epicenter);
}

ProbingSequence optimal_sequence(HashFamilyKind kind, const EpicenterGeometry& geometry, double distance,
                                 std::size_t probes_after_epicenter) {
  return optimal_sequence(LandingModel(kind, distance), geometry, probes_after_epicenter);
}

ProbingSequence subset_sum_sequence(const EpicenterGeometry& geometry, std::size_t probes_after_epicenter) {
  return sequence_from_faces(rank_faces_by_distance(geometry), probes_after_epicenter);
}

double subset_sum_score(const EpicenterGeometry& geometry, const PerturbationVector& delta) {
  require(delta.size() == geometry.functions(), ErrorCategory::kDimensionMismatch,
          "perturbation length does not match M");
  double sum = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double x = geometry.face_distance(i, delta[i]);
    sum += x * x;
  }
  return sum;
}

double expected_squared_face_distance(std::size_t rank, std::size_t functions, double width) {
  require(functions >= 1 && rank >= 1 && rank <= 2 * functions, ErrorCategory::kInvalidArgument,
          "rank must lie in [1, 2M]");
  const auto m = static_cast<double>(functions);
  const auto j = static_cast<double>(rank);
  const double denom = 4.0 * (m + 1.0) * (m + 2.0);
  if (rank <= functions) {
    return j * (j + 1.0) / denom * width * width;
  }
  const double k = 2.0 * m + 1.0 - j;
  return (1.0 - k / (m + 1.0) + k * (k + 1.0) / denom) * width * width;
}

Template build_template(std::size_t functions, double width, std::size_t length) {
  require(functions >= 1, ErrorCategory::kInvalidArgument, "template needs M >= 1");
  require(std::isfinite(width) && width > 0.0, ErrorCategory::kInvalidArgument, "template needs W > 0");
  const std::size_t n = 2 * functions;
  std::vector<double> costs(n);
  std::vector<std::uint32_t> partner(n);
  for (std::size_t j = 0; j < n; ++j) {
    costs[j] = expected_squared_face_distance(j + 1, functions, width);
    partner[j] = static_cast<std::uint32_t>(n - 1 - j);
  }
  auto subsets = additive_cost_heap(costs, partner, length);
  Template tmpl;
  tmpl.functions = functions;
  tmpl.width = width;
  tmpl.subsets.assign(std::make_move_iterator(subsets.begin() + 1), std::make_move_iterator(subsets.end()));
  tmpl.expected_scores.reserve(tmpl.subsets.size());
  for (const auto& s : tmpl.subsets) {
    tmpl.expected_scores.push_back(subset_cost(costs, s));
  }
  return tmpl;
}

ProbingSequence instantiate(const Template& tmpl, const EpicenterGeometry& geometry, std::size_t limit) {
  require(tmpl.functions == geometry.functions(), ErrorCategory::kDimensionMismatch,
          "template M does not match the query geometry");
  const RankedFaces faces = rank_faces_by_distance(geometry);
  const std::size_t count = std::min(limit, tmpl.subsets.size());
  ProbingSequence seq;
  seq.probes.reserve(count + 1);
  seq.scores.reserve(count + 1);
  seq.probes.emplace_back(geometry.functions(), 0);
  seq.scores.push_back(0.0);
  for (std::size_t t = 0; t < count; ++t) {
    seq.probes.push_back(faces.to_perturbation(tmpl.subsets[t]));
    seq.scores.push_back(tmpl.expected_scores[t]);
  }
  return seq;
}

std::vector<double> cumulative_success_prob(const LandingModel& model, const EpicenterGeometry& geometry,
                                            const ProbingSequence& sequence) {
  const std::size_t m = geometry.functions();
  std::vector<double> per_face(3 * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (int s = -1; s <= 1; ++s) {
      per_face[3 * i + static_cast<std::size_t>(s + 1)] = model.bucket(geometry.x_minus(i), geometry.width(), s);
    }
  }
  std::vector<double> out;
  out.reserve(sequence.size());
  double total = 0.0;
  for (const auto& delta : sequence.probes) {
    require(delta.size() == m, ErrorCategory::kDimensionMismatch, "perturbation length does not match M");
    double p = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      p *= per_face[3 * i + static_cast<std::size_t>(delta[i] + 1)];
    }
    total += p;
    out.push_back(total);
  }
  return out;
}

double total_success_prob(HashFamilyKind kind, const EpicenterGeometry& geometry, double distance,
                          const ProbingSequence& sequence) {
  const auto sums = cumulative_success_prob(LandingModel(kind, distance), geometry, sequence);
  return sums.empty() ? 0.0 : sums.back();
}

}  // namespace rwlsh
