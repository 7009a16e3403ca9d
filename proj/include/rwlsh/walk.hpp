// SPDX-License-Identifier: Apache-2.0

// Random-walk projections: precomputed walk tables, the raw hash they define,
// and the exact distribution of the difference of two raw hashes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rwlsh/core.hpp"

namespace rwlsh {

/// Largest coordinate a walk table can index. Entries are signed 16-bit and
/// |tau(t)| <= t, so t must stay below 2^15.
inline constexpr Coord kMaxWalkUniverse = 32766;

/// Prefix sums tau(t) of i.i.d. +-1 walks for every (table, function, dimension)
/// at even t in {2, 4, ..., U_i}. tau(0) = 0 is implicit.
///
/// Each walk draws its steps from a SplitMix64 stream seeded with
/// derive_seed(seed, {table, function, dimension}); bit b of the w-th word is
/// step 64w + b + 1, and a set bit means +1.
class RandomWalkTable {
 public:
  RandomWalkTable() = default;
  RandomWalkTable(std::size_t tables, std::size_t functions, std::vector<Coord> caps,
                  std::uint64_t seed, std::vector<std::int16_t> entries);

  std::size_t tables() const noexcept { return tables_; }
  std::size_t functions() const noexcept { return functions_; }
  std::size_t dim() const noexcept { return caps_.size(); }
  const std::vector<Coord>& caps() const noexcept { return caps_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::int16_t>& entries() const noexcept { return entries_; }
  std::size_t byte_size() const noexcept { return entries_.size() * sizeof(std::int16_t); }

  /// Entries tau(2), tau(4), ..., tau(U_i) of one walk.
  std::span<const std::int16_t> walk(std::size_t table, std::size_t function, std::size_t dim) const;

  /// tau(t) for even t in [0, U_i]; unchecked.
  int prefix(std::size_t table, std::size_t function, std::size_t dim, Coord t) const noexcept {
    return t == 0 ? 0 : entries_[base(table, function) + dim_offset_[dim] + static_cast<std::size_t>(t / 2 - 1)];
  }

  bool operator==(const RandomWalkTable& other) const noexcept {
    return tables_ == other.tables_ && functions_ == other.functions_ && caps_ == other.caps_ &&
           seed_ == other.seed_ && entries_ == other.entries_;
  }

 private:
  std::size_t base(std::size_t table, std::size_t function) const noexcept {
    return (table * functions_ + function) * per_function_;
  }

  std::size_t tables_ = 0;
  std::size_t functions_ = 0;
  std::vector<Coord> caps_;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> dim_offset_;
  std::size_t per_function_ = 0;
  std::vector<std::int16_t> entries_;
};

/// Builds the walks for `tables` x `functions` raw hashes over `caps.size()`
/// dimensions. Walks are generated in parallel; the result is a pure function
/// of (caps, functions, tables, seed).
RandomWalkTable build_walk_table(std::span<const Coord> caps, std::size_t functions, std::size_t tables,
                                 std::uint64_t seed);

namespace reference {
RandomWalkTable build_walk_table(std::span<const Coord> caps, std::size_t functions, std::size_t tables,
                                 std::uint64_t seed);
}  // namespace reference

/// f(s) = sum_i tau_i(s_i). Throws kOutOfRange naming the dimension when a
/// coordinate is negative, odd, or beyond the walk's universe.
std::int64_t raw_hash(const RandomWalkTable& table, std::size_t table_idx, std::size_t fn_idx,
                      std::span<const Coord> point);

/// Pr[Y_d = l] for a d-step simple random walk. Exact, evaluated in log space.
/// Throws kInvalidArgument unless d is a nonnegative even integer.
double walk_pmf(std::int64_t d, std::int64_t l);

/// Step count up to which interval_probability sums the exact pmf; beyond it a
/// normal approximation with lattice continuity correction is used.
inline constexpr std::int64_t kExactPmfMaxSteps = 512;

/// Pr[lo <= Y_d < hi]. Infinite bounds are allowed.
double interval_probability(std::int64_t d, double lo, double hi);

/// p(d) = sum_{l=-W}^{W} (1 - |l|/W) Pr[Y_d = l]. W must be a positive even integer.
double collision_probability(std::int64_t d, std::int64_t width);

/// Same quantity through p(d) = (1/W) sum_{t=0}^{W-1} Pr[|Y_d| <= t].
double collision_probability_appendix(std::int64_t d, std::int64_t width);

/// Full pmf of Y_d over even l in [-d, d], kept for repeated interval queries.
class WalkDistribution {
 public:
  explicit WalkDistribution(std::int64_t d);

  std::int64_t steps() const noexcept { return d_; }
  /// pmf()[j] = Pr[Y_d = -d + 2j].
  const std::vector<double>& pmf() const noexcept { return pmf_; }
  double operator()(std::int64_t l) const noexcept;
  /// Pr[lo <= Y_d < hi], exact for every d.
  double interval(double lo, double hi) const noexcept;

 private:
  std::int64_t d_;
  std::vector<double> pmf_;
};

}  // namespace rwlsh
