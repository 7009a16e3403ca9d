// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rwlsh/error.hpp"
#include "rwlsh/random.hpp"

namespace rwlsh {

namespace {

void check_caps(std::span<const Coord> caps) {
  require(!caps.empty(), ErrorCategory::kInvalidArgument, "walk table needs at least one dimension");
  for (std::size_t i = 0; i < caps.size(); ++i) {
    require(caps[i] >= 0 && caps[i] % 2 == 0, ErrorCategory::kInvalidArgument,
            "walk universe for dimension " + std::to_string(i) + " must be a nonnegative even integer");
    require(caps[i] <= kMaxWalkUniverse, ErrorCategory::kOutOfRange,
            "walk universe for dimension " + std::to_string(i) + " exceeds the 16-bit entry bound");
  }
}

void fill_walk(std::uint64_t walk_seed, std::span<std::int16_t> out) {
  std::uint64_t state = walk_seed;
  std::uint64_t word = 0;
  int bits_left = 0;
  int position = 0;
  auto step = [&]() {
    if (bits_left == 0) {
      state += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
      bits_left = 64;
    }
    const int s = (word & 1U) != 0 ? 1 : -1;
    word >>= 1;
    --bits_left;
    return s;
  };
  for (auto& entry : out) {
    position += step();
    position += step();
    entry = static_cast<std::int16_t>(position);
  }
}

struct TableLayout {
  std::vector<std::size_t> dim_offset;
  std::size_t per_function = 0;
};

TableLayout layout_for(std::span<const Coord> caps) {
  TableLayout layout;
  layout.dim_offset.resize(caps.size());
  for (std::size_t i = 0; i < caps.size(); ++i) {
    layout.dim_offset[i] = layout.per_function;
    layout.per_function += static_cast<std::size_t>(caps[i] / 2);
  }
  return layout;
}

double log_binomial_half(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0) - static_cast<double>(n) * std::numbers::ln2;
}

void check_steps(std::int64_t d) {
  require(d >= 0 && d % 2 == 0, ErrorCategory::kInvalidArgument,
          "walk step count must be a nonnegative even integer, got " + std::to_string(d));
}

void check_width(std::int64_t width) {
  require(width >= 2 && width % 2 == 0, ErrorCategory::kInvalidArgument,
          "bucket width W must be a positive even integer, got " + std::to_string(width));
}

// Smallest even integer >= x and largest even integer < x.
double even_ceil(double x) { return 2.0 * std::ceil(x / 2.0); }
double even_below(double x) { return 2.0 * std::ceil(x / 2.0) - 2.0; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

RandomWalkTable::RandomWalkTable(std::size_t tables, std::size_t functions, std::vector<Coord> caps,
                                 std::uint64_t seed, std::vector<std::int16_t> entries)
    : tables_(tables), functions_(functions), caps_(std::move(caps)), seed_(seed), entries_(std::move(entries)) {
  check_caps(caps_);
  auto layout = layout_for(caps_);
  dim_offset_ = std::move(layout.dim_offset);
  per_function_ = layout.per_function;
  require(entries_.size() == tables_ * functions_ * per_function_, ErrorCategory::kCorruption,
          "walk table entry count does not match its shape");
}

std::span<const std::int16_t> RandomWalkTable::walk(std::size_t table, std::size_t function,
                                                    std::size_t dim) const {
  require(table < tables_ && function < functions_ && dim < caps_.size(), ErrorCategory::kOutOfRange,
          "walk index out of range");
  return {entries_.data() + base(table, function) + dim_offset_[dim], static_cast<std::size_t>(caps_[dim] / 2)};
}

RandomWalkTable build_walk_table(std::span<const Coord> caps, std::size_t functions, std::size_t tables,
                                 std::uint64_t seed) {
  check_caps(caps);
  require(functions >= 1 && tables >= 1, ErrorCategory::kInvalidArgument,
          "walk table needs at least one table and one function");
  const auto layout = layout_for(caps);
  const std::size_t walks = tables * functions * caps.size();
  std::vector<std::int16_t> entries;
  try {
    entries.resize(tables * functions * layout.per_function);
  } catch (const std::bad_alloc&) {
    fail(ErrorCategory::kResourceExhausted, "walk table allocation failed");
  }

  const auto count = static_cast<std::int64_t>(walks);
#pragma omp parallel for schedule(static)
  for (std::int64_t w = 0; w < count; ++w) {
    const auto uw = static_cast<std::size_t>(w);
    const std::size_t dim = uw % caps.size();
    const std::size_t function = (uw / caps.size()) % functions;
    const std::size_t table = uw / (caps.size() * functions);
    const std::size_t offset = (table * functions + function) * layout.per_function + layout.dim_offset[dim];
    fill_walk(derive_seed(seed, {table, function, dim}),
              std::span<std::int16_t>(entries.data() + offset, static_cast<std::size_t>(caps[dim] / 2)));
  }
  return RandomWalkTable(tables, functions, std::vector<Coord>(caps.begin(), caps.end()), seed,
                         std::move(entries));
}

namespace reference {

RandomWalkTable build_walk_table(std::span<const Coord> caps, std::size_t functions, std::size_t tables,
                                 std::uint64_t seed) {
  check_caps(caps);
  const auto layout = layout_for(caps);
  std::vector<std::int16_t> entries(tables * functions * layout.per_function);
  for (std::size_t table = 0; table < tables; ++table) {
    for (std::size_t function = 0; function < functions; ++function) {
      for (std::size_t dim = 0; dim < caps.size(); ++dim) {
        const std::size_t offset =
            (table * functions + function) * layout.per_function + layout.dim_offset[dim];
        fill_walk(derive_seed(seed, {table, function, dim}),
                  std::span<std::int16_t>(entries.data() + offset, static_cast<std::size_t>(caps[dim] / 2)));
      }
    }
  }
  return RandomWalkTable(tables, functions, std::vector<Coord>(caps.begin(), caps.end()), seed,
                         std::move(entries));
}

}  // namespace reference

std::int64_t raw_hash(const RandomWalkTable& table, std::size_t table_idx, std::size_t fn_idx,
                      std::span<const Coord> point) {
  require(point.size() == table.dim(), ErrorCategory::kDimensionMismatch, "raw_hash: dimension mismatch");
  require(table_idx < table.tables() && fn_idx < table.functions(), ErrorCategory::kOutOfRange,
          "raw_hash: function index out of range");
  const auto& caps = table.caps();
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const Coord s = point[i];
    if (s < 0 || s > caps[i] || s % 2 != 0) {
      fail(ErrorCategory::kOutOfRange, "coordinate " + std::to_string(s) + " in dimension " + std::to_string(i) +
                                           " is outside the walk universe [0, " + std::to_string(caps[i]) + "]");
    }
    sum += table.prefix(table_idx, fn_idx, i, s);
  }
  return sum;
}

double walk_pmf(std::int64_t d, std::int64_t l) {
  check_steps(d);
  if (l < -d || l > d || (l % 2) != 0) {
    return 0.0;
  }
  // Fold to |l| so the pmf is exactly symmetric.
  return std::exp(log_binomial_half(d, (d + std::abs(l)) / 2));
}

double interval_probability(std::int64_t d, double lo, double hi) {
  check_steps(d);
  require(!(hi < lo), ErrorCategory::kInvalidArgument, "interval_probability: lo must not exceed hi");
  const double first = std::max(even_ceil(lo), static_cast<double>(-d));
  const double last = std::min(even_below(hi), static_cast<double>(d));
  if (first > last) {
    return 0.0;
  }
  if (d > kExactPmfMaxSteps) {
    const double sigma = std::sqrt(static_cast<double>(d));
    const double upper = last >= static_cast<double>(d) ? 1.0 : normal_cdf((last + 1.0) / sigma);
    const double lower = first <= static_cast<double>(-d) ? 0.0 : normal_cdf((first - 1.0) / sigma);
    return std::max(0.0, upper - lower);
  }
  double sum = 0.0;
  for (auto l = static_cast<std::int64_t>(first); l <= static_cast<std::int64_t>(last); l += 2) {
    sum += std::exp(log_binomial_half(d, (d + l) / 2));
  }
  return std::min(sum, 1.0);
}

double collision_probability(std::int64_t d, std::int64_t width) {
  check_steps(d);
  check_width(width);
  double sum = 0.0;
  for (std::int64_t l = -width; l <= width; ++l) {
    const double weight = 1.0 - static_cast<double>(l < 0 ? -l : l) / static_cast<double>(width);
    sum += weight * walk_pmf(d, l);
  }
  return sum;
}

double collision_probability_appendix(std::int64_t d, std::int64_t width) {
  check_steps(d);
  check_width(width);
  double sum = 0.0;
  double within = 0.0;  // Pr[|Y_d| <= t], grown as t increases
  for (std::int64_t t = 0; t < width; ++t) {
    within += t == 0 ? walk_pmf(d, 0) : walk_pmf(d, t) + walk_pmf(d, -t);
    sum += within;
  }
  return sum / static_cast<double>(width);
}

WalkDistribution::WalkDistribution(std::int64_t d) : d_(d) {
  check_steps(d);
  pmf_.resize(static_cast<std::size_t>(d + 1));
  for (std::size_t j = 0; j < pmf_.size(); ++j) {
    pmf_[j] = std::exp(log_binomial_half(d, static_cast<std::int64_t>(j)));
  }
}

double WalkDistribution::operator()(std::int64_t l) const noexcept {
  if (l < -d_ || l > d_ || (l % 2) != 0) {
    return 0.0;
  }
  return pmf_[static_cast<std::size_t>((l + d_) / 2)];
}

double WalkDistribution::interval(double lo, double hi) const noexcept {
  const double first = std::max(even_ceil(lo), static_cast<double>(-d_));
  const double last = std::min(even_below(hi), static_cast<double>(d_));
  double sum = 0.0;
  for (auto l = static_cast<std::int64_t>(first); l <= static_cast<std::int64_t>(last); l += 2) {
    sum += pmf_[static_cast<std::size_t>((l + d_) / 2)];
  }
  return std::min(sum, 1.0);
}

}  // namespace rwlsh
