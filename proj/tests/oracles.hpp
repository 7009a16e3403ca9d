// SPDX-License-Identifier: Apache-2.0

// Independent reference computations shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <tuple>
#include <vector>

#include "rwlsh/hash_family.hpp"

namespace rwlsh::oracle {

// Cost of moving function i to face -1 (index 0) or +1 (index 1).
using FaceCosts = std::vector<std::array<double, 2>>;

inline FaceCosts squared_distance_costs(const EpicenterGeometry& g) {
  FaceCosts costs(g.functions());
  for (std::size_t i = 0; i < g.functions(); ++i) {
    costs[i] = {g.x_minus(i) * g.x_minus(i), g.x_plus(i) * g.x_plus(i)};
  }
  return costs;
}

// Pr[lo <= d * C < hi] for standard Cauchy C.
inline double cauchy_mass(double lo, double hi, double d) {
  return (std::atan(hi / d) - std::atan(lo / d)) / std::numbers::pi;
}

inline FaceCosts cauchy_log_costs(const EpicenterGeometry& g, double d) {
  FaceCosts costs(g.functions());
  const double w = g.width();
  for (std::size_t i = 0; i < g.functions(); ++i) {
    const double xm = g.x_minus(i);
    const double xp = g.x_plus(i);
    const double p0 = cauchy_mass(-xm, xp, d);
    costs[i] = {std::log(p0) - std::log(cauchy_mass(-xm - w, -xm, d)),
                std::log(p0) - std::log(cauchy_mass(xp, xp + w, d))};
  }
  return costs;
}

// Every nonzero perturbation of the 3^M neighborhood, ordered by
// (sum of face costs taken in ascending rank order, ranks lexicographically),
// with faces ranked by (cost, function, sign).
inline std::vector<PerturbationVector> exhaustive_order(const FaceCosts& costs) {
  const std::size_t m = costs.size();
  std::vector<std::tuple<double, std::size_t, int>> faces;
  for (std::size_t i = 0; i < m; ++i) {
    faces.emplace_back(costs[i][0], i, -1);
    faces.emplace_back(costs[i][1], i, +1);
  }
  std::sort(faces.begin(), faces.end());
  std::vector<std::array<std::uint32_t, 2>> rank_of(m);
  for (std::uint32_t r = 0; r < faces.size(); ++r) {
    rank_of[std::get<1>(faces[r])][std::get<2>(faces[r]) < 0 ? 0 : 1] = r;
  }

  struct Entry {
    double sum;
    std::vector<std::uint32_t> ranks;
    PerturbationVector delta;
  };
  std::vector<Entry> entries;
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    PerturbationVector delta(m);
    std::size_t c = code;
    std::vector<std::uint32_t> ranks;
    for (std::size_t i = 0; i < m; ++i, c /= 3) {
      delta[i] = static_cast<std::int8_t>(static_cast<int>(c % 3) - 1);
      if (delta[i] != 0) ranks.push_back(rank_of[i][delta[i] < 0 ? 0 : 1]);
    }
    if (ranks.empty()) continue;
    std::sort(ranks.begin(), ranks.end());
    double sum = 0.0;
    for (auto r : ranks) sum += std::get<0>(faces[r]);
    entries.push_back({sum, std::move(ranks), std::move(delta)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.sum != b.sum ? a.sum < b.sum : a.ranks < b.ranks;
  });
  std::vector<PerturbationVector> out;
  for (auto& e : entries) out.push_back(std::move(e.delta));
  return out;
}

inline EpicenterGeometry random_geometry(std::size_t m, double width, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pick(0.0, width);
  std::vector<double> lower(m);
  for (auto& x : lower) x = pick(gen);
  return EpicenterGeometry(width, lower);
}

// C(n, n/2) / 2^n for even n by the ratio recurrence, avoiding lgamma.
inline double central_binomial_half(std::int64_t n) {
  double c = 1.0;
  for (std::int64_t k = 0; k < n; k += 2) {
    const double a = static_cast<double>(k + 1);
    const double b = static_cast<double>(k + 2);
    const double h = static_cast<double>(k / 2 + 1);
    c *= a * b / (h * h * 4.0);
  }
  return c;
}

}  // namespace rwlsh::oracle
