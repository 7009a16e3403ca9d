// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <random>

#include "rwlsh/core.hpp"
#include "rwlsh/error.hpp"

namespace rwlsh {
namespace {

NormalizedDataset identity_dataset(std::size_t dim, std::vector<Coord> coords) {
  NormalizationParams params;
  params.shift.assign(dim, 0.0);
  params.scale = 1.0;
  return NormalizedDataset(dim, std::move(coords), params);
}

NormalizedDataset random_dataset(std::size_t n, std::size_t dim, Coord max_half, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Coord> pick(0, max_half);
  std::vector<Coord> coords(n * dim);
  for (auto& c : coords) c = 2 * pick(gen);
  return identity_dataset(dim, std::move(coords));
}

TEST(L1Distance, HandCases) {
  const std::vector<Coord> u{0, 0};
  const std::vector<Coord> v{2, 4};
  EXPECT_EQ(l1_distance(u, u), 0U);
  EXPECT_EQ(l1_distance(u, v), 6U);
}

TEST(L1Distance, MatchesIndependentAccumulation) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<Coord> pick(0, 5000);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Coord> u(32);
    std::vector<Coord> v(32);
    for (auto& x : u) x = 2 * pick(gen);
    for (auto& x : v) x = 2 * pick(gen);
    long long expected = 0;
    for (std::size_t i = 0; i < 32; ++i) expected += std::llabs(static_cast<long long>(u[i]) - v[i]);
    EXPECT_EQ(l1_distance(u, v), static_cast<Distance>(expected));
    EXPECT_EQ(l1_distance(u, v) % 2, 0U);
  }
}

TEST(L1Distance, MetricAxioms) {
  const auto data = random_dataset(60, 8, 100, 5);
  for (std::size_t a = 0; a + 2 < data.size(); a += 3) {
    const auto s = data.point(a);
    const auto t = data.point(a + 1);
    const auto u = data.point(a + 2);
    EXPECT_EQ(l1_distance(s, t), l1_distance(t, s));
    EXPECT_LE(l1_distance(s, u), l1_distance(s, t) + l1_distance(t, u));
    EXPECT_EQ(l1_distance(s, t) == 0, std::equal(s.begin(), s.end(), t.begin()));
  }
}

TEST(L1Distance, RejectsDimensionMismatch) {
  const std::vector<Coord> u{0, 0};
  const std::vector<Coord> v{2};
  EXPECT_THROW(l1_distance(u, v), Error);
}

TEST(RoundToEven, TiesRoundUp) {
  EXPECT_EQ(round_to_even(0.0), 0);
  EXPECT_EQ(round_to_even(0.9), 0);
  EXPECT_EQ(round_to_even(1.0), 2);
  EXPECT_EQ(round_to_even(3.0), 4);
  EXPECT_EQ(round_to_even(2.99), 2);
  EXPECT_EQ(round_to_even(5.2), 6);
}

TEST(RawDataset, Validation) {
  EXPECT_THROW(RawDataset(2, {}), Error);
  EXPECT_THROW(RawDataset(2, {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(RawDataset(1, {std::nan("")}), Error);
  const auto raw = RawDataset::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(raw.size(), 2U);
  EXPECT_EQ(raw.dim(), 3U);
}

TEST(Normalize, HandExample) {
  const RawDataset raw(1, {-1.0, 1.0});
  NormalizeOptions options;
  options.scale_cap = 4;
  const auto data = normalize(raw, options);
  EXPECT_DOUBLE_EQ(data.params().shift[0], 1.0);
  EXPECT_DOUBLE_EQ(data.params().scale, 2.0);
  EXPECT_EQ(data.coords(), (std::vector<Coord>{0, 4}));
  EXPECT_EQ(data.universe(), 4);
}

TEST(Normalize, IdentityWhenAlreadyEven) {
  const RawDataset raw(2, {0, 4, 10, 2, 6, 8});
  NormalizeOptions options;
  options.scale = 1.0;
  const auto data = normalize(raw, options);
  EXPECT_EQ(data.coords(), (std::vector<Coord>{0, 4, 10, 2, 6, 8}));
  EXPECT_EQ(data.universe_caps(), (std::vector<Coord>{10, 8}));
}

TEST(Normalize, OutputEvenAndWithinCap) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 50.0);
  std::vector<double> values(500 * 6);
  for (auto& v : values) v = noise(gen);
  const auto data = normalize(RawDataset(6, values));
  for (Coord c : data.coords()) {
    EXPECT_EQ(c % 2, 0);
    EXPECT_GE(c, 0);
    EXPECT_LE(c, NormalizeOptions::kDefaultScaleCap);
  }
  EXPECT_EQ(std::fmod(data.params().scale, 2.0), 0.0);
}

TEST(Normalize, DegenerateDatasetSucceeds) {
  const auto data = normalize(RawDataset(2, {0, 0, 0, 0}));
  EXPECT_EQ(data.coords(), (std::vector<Coord>{0, 0, 0, 0}));
}

TEST(Normalize, PreservesNearestNeighborLists) {
  // Points on a 0.5 lattice: the scale is a multiple of 2 large enough that
  // every coordinate maps exactly, so rankings cannot move.
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> pick(-200, 200);
  std::vector<double> values(100 * 8);
  for (auto& v : values) v = 0.5 * pick(gen);
  const RawDataset raw(8, values);
  const auto data = normalize(raw, NormalizeOptions{64000, std::nullopt});
  ASSERT_DOUBLE_EQ(data.params().scale, 320.0);
  for (std::size_t q = 0; q < 100; q += 7) {
    std::vector<std::pair<double, PointId>> expected;
    for (std::size_t p = 0; p < raw.size(); ++p) {
      double d = 0.0;
      for (std::size_t i = 0; i < 8; ++i) d += std::abs(raw.point(p)[i] - raw.point(q)[i]);
      expected.emplace_back(d, static_cast<PointId>(p));
    }
    std::sort(expected.begin(), expected.end());
    const auto got = brute_force_knn(data, data.point(q), 10);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(got[i].id, expected[i].second);
  }
}

TEST(NormalizePoint, AppliesStoredParams) {
  NormalizationParams params{{1.0, 0.0}, 2.0};
  const std::vector<double> q{0.0, 1.6};
  EXPECT_EQ(normalize_point(params, q), (std::vector<Coord>{2, 4}));
  const std::vector<double> bad{0.0};
  EXPECT_THROW(normalize_point(params, bad), Error);
}

TEST(NormalizedDataset, RejectsOddOrNegative) {
  NormalizationParams params{{0.0}, 1.0};
  EXPECT_THROW(NormalizedDataset(1, {3}, params), Error);
  EXPECT_THROW(NormalizedDataset(1, {-2}, params), Error);
}

TEST(BruteForceKnn, HandEnumeration) {
  const auto data = identity_dataset(1, {0, 2, 10});
  const std::vector<Coord> q{4};
  const auto got = brute_force_knn(data, q, 2);
  ASSERT_EQ(got.size(), 2U);
  EXPECT_EQ(got[0], (Neighbor{1, 2}));
  EXPECT_EQ(got[1], (Neighbor{0, 4}));
}

TEST(BruteForceKnn, KEqualsNReturnsAllSorted) {
  const auto data = random_dataset(50, 4, 10, 2);
  const auto got = brute_force_knn(data, data.point(0), 50);
  ASSERT_EQ(got.size(), 50U);
  EXPECT_TRUE(std::is_sorted(got.begin(), got.end(), neighbor_less));
}

TEST(BruteForceKnn, TiesBrokenById) {
  const auto data = identity_dataset(1, {4, 0, 4, 8, 0});
  const std::vector<Coord> q{2};
  const auto got = brute_force_knn(data, q, 4);
  EXPECT_EQ(got[0].id, 0U);
  EXPECT_EQ(got[1].id, 1U);
  EXPECT_EQ(got[2].id, 2U);
  EXPECT_EQ(got[3].id, 4U);
}

TEST(BruteForceKnn, ParallelMatchesReference) {
  const auto data = random_dataset(3000, 16, 20, 4);
  for (std::size_t q = 0; q < 3000; q += 301) {
    EXPECT_EQ(brute_force_knn(data, data.point(q), 25), reference::brute_force_knn(data, data.point(q), 25));
  }
}

TEST(BruteForceKnn, RejectsBadK) {
  const auto data = identity_dataset(1, {0, 2});
  const std::vector<Coord> q{0};
  EXPECT_THROW(brute_force_knn(data, q, 3), Error);
  EXPECT_THROW(brute_force_knn(data, q, 0), Error);
}

}  // namespace
}  // namespace rwlsh
