// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rwlsh/error.hpp"
#include "rwlsh/multiprobe.hpp"
#include "rwlsh/walk.hpp"

namespace rwlsh {
namespace {

using PV = PerturbationVector;

const EpicenterGeometry& toy_geometry() {
  static const EpicenterGeometry g(10.0, {1.47, 5.38});
  return g;
}

const std::vector<PV>& toy_sequence() {
  static const std::vector<PV> seq{{0, 0}, {-1, 0}, {0, 1}, {-1, 1}, {0, -1}, {-1, -1}, {1, 0}, {1, 1}, {1, -1}};
  return seq;
}

std::vector<std::uint32_t> mirror_partner(std::size_t n) {
  std::vector<std::uint32_t> partner(n);
  for (std::size_t j = 0; j < n; ++j) partner[j] = static_cast<std::uint32_t>(n - 1 - j);
  return partner;
}

TEST(Heap, ToyCostsGiveToySequence) {
  const std::vector<double> costs{1.47 * 1.47, 4.62 * 4.62, 5.38 * 5.38, 8.53 * 8.53};
  const auto subsets = additive_cost_heap(costs, mirror_partner(4), 8);
  // Ranks 0..3 are x1(-1), x2(+1), x2(-1), x1(+1).
  const std::uint32_t function[] = {0, 1, 1, 0};
  const std::int8_t sign[] = {-1, 1, -1, 1};
  ASSERT_EQ(subsets.size(), 9U);
  for (std::size_t t = 0; t < subsets.size(); ++t) {
    PV delta(2, 0);
    for (auto r : subsets[t]) delta[function[r]] = sign[r];
    EXPECT_EQ(delta, toy_sequence()[t]) << "t=" << t;
  }
}

TEST(Heap, SingleProbeIsSmallestRank) {
  const std::vector<double> costs{0.5, 1.0, 2.0, 3.0};
  const auto subsets = additive_cost_heap(costs, mirror_partner(4), 1);
  ASSERT_EQ(subsets.size(), 2U);
  EXPECT_TRUE(subsets[0].empty());
  EXPECT_EQ(subsets[1], (RankSubset{0}));
}

TEST(Heap, MatchesExhaustiveEnumerationAtMThree) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_geometry(3, 5.0, gen);
    const auto expected = oracle::exhaustive_order(oracle::squared_distance_costs(g));
    const auto seq = subset_sum_sequence(g, 26);
    ASSERT_EQ(seq.size(), 27U);
    for (std::size_t t = 0; t < 26; ++t) EXPECT_EQ(seq.probes[t + 1], expected[t]);
  }
}

TEST(Heap, EmitsAllWhenTExceedsNeighborhood) {
  std::mt19937_64 gen(2);
  const auto g = oracle::random_geometry(2, 4.0, gen);
  const auto seq = subset_sum_sequence(g, 100);
  EXPECT_EQ(seq.size(), 9U);
  std::set<PV> distinct(seq.probes.begin(), seq.probes.end());
  EXPECT_EQ(distinct.size(), 9U);
}

TEST(Heap, SumsNonDecreasingAndSubsetsValid) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> pick(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> costs(12);
    for (auto& c : costs) c = pick(gen);
    std::sort(costs.begin(), costs.end());
    const auto partner = mirror_partner(12);
    const auto subsets = additive_cost_heap(costs, partner, 200);
    EXPECT_EQ(subsets.size(), 201U);
    for (std::size_t t = 1; t < subsets.size(); ++t) {
      EXPECT_LE(subset_cost(costs, subsets[t - 1]), subset_cost(costs, subsets[t]));
      for (auto r : subsets[t]) {
        EXPECT_EQ(std::count(subsets[t].begin(), subsets[t].end(), partner[r]), 0);
      }
    }
  }
}

TEST(Heap, RejectsBadInputs) {
  EXPECT_THROW(additive_cost_heap(std::vector<double>{2.0, 1.0}, mirror_partner(2), 3), Error);
  EXPECT_THROW(additive_cost_heap(std::vector<double>{-1.0, 1.0}, mirror_partner(2), 3), Error);
  EXPECT_THROW(additive_cost_heap(std::vector<double>{1.0, 2.0}, std::vector<std::uint32_t>{0, 1}, 3), Error);
}

TEST(OptimalSequence, ZeroProbesIsEpicenterOnly) {
  const auto seq = optimal_sequence(HashFamilyKind::kRandomWalk, toy_geometry(), 6.0, 0);
  ASSERT_EQ(seq.size(), 1U);
  EXPECT_EQ(seq.probes[0], (PV{0, 0}));
}

TEST(OptimalSequence, CauchyMatchesExhaustiveProbabilityRanking) {
  std::mt19937_64 gen(40);
  const LandingModel model(HashFamilyKind::kCauchyProjection, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_geometry(4, 20.0, gen);
    std::vector<double> probs;
    for (std::size_t code = 0; code < 81; ++code) {
      PV delta(4);
      std::size_t c = code;
      for (auto& v : delta) v = static_cast<std::int8_t>(static_cast<int>(c % 3) - 1), c /= 3;
      probs.push_back(bucket_success_prob(model, g, delta));
    }
    std::sort(probs.rbegin(), probs.rend());
    const auto seq = optimal_sequence(model, g, 20);
    ASSERT_EQ(seq.size(), 21U);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      EXPECT_NEAR(bucket_success_prob(model, g, seq.probes[t]), probs[t], 1e-12 * probs[0]) << t;
    }
  }
}

TEST(OptimalSequence, RandomWalkMatchesExhaustiveProbabilityRanking) {
  std::mt19937_64 gen(41);
  const LandingModel model(HashFamilyKind::kRandomWalk, 8.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_geometry(4, 8.0, gen);
    std::vector<double> probs;
    for (std::size_t code = 0; code < 81; ++code) {
      PV delta(4);
      std::size_t c = code;
      for (auto& v : delta) v = static_cast<std::int8_t>(static_cast<int>(c % 3) - 1), c /= 3;
      probs.push_back(bucket_success_prob(model, g, delta));
    }
    std::sort(probs.rbegin(), probs.rend());
    const auto seq = optimal_sequence(model, g, 30);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      EXPECT_NEAR(bucket_success_prob(model, g, seq.probes[t]), probs[t], 1e-12) << t;
    }
  }
}

TEST(SubsetSum, ToyScoreAndOrder) {
  EXPECT_NEAR(subset_sum_score(toy_geometry(), {1, 1}), 94.11, 0.01);
  const auto seq = subset_sum_sequence(toy_geometry(), 8);
  EXPECT_EQ(seq.probes, toy_sequence());
}

TEST(Template, TwoFunctionList) {
  const auto tmpl = build_template(2, 10.0, 8);
  const std::vector<RankSubset> expected{{0}, {1}, {0, 1}, {2}, {0, 2}, {3}, {1, 3}, {2, 3}};
  EXPECT_EQ(tmpl.subsets, expected);
}

TEST(Template, ExpectedSquaredDistanceFormula) {
  EXPECT_NEAR(expected_squared_face_distance(1, 2, 12.0), 6.0, 1e-12);
  EXPECT_THROW(expected_squared_face_distance(5, 2, 12.0), Error);
}

TEST(Template, ExpectedSquaredDistanceMatchesOrderStatistics) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  constexpr std::size_t kM = 5;
  constexpr int kSamples = 200000;
  std::vector<double> mean(2 * kM, 0.0);
  std::vector<double> z(2 * kM);
  for (int s = 0; s < kSamples; ++s) {
    for (std::size_t i = 0; i < kM; ++i) {
      const double x = pick(gen);
      z[2 * i] = x;
      z[2 * i + 1] = 1.0 - x;
    }
    std::sort(z.begin(), z.end());
    for (std::size_t j = 0; j < 2 * kM; ++j) mean[j] += z[j] * z[j] / kSamples;
  }
  for (std::size_t j = 0; j < 2 * kM; ++j) {
    const double formula = expected_squared_face_distance(j + 1, kM, 1.0);
    EXPECT_NEAR(mean[j], formula, 0.01 * formula + 1e-4) << "rank " << j + 1;
  }
}

TEST(Template, ScoresNonDecreasingAndSubsetsValid) {
  const auto tmpl = build_template(10, 8.0, 100);
  ASSERT_EQ(tmpl.length(), 100U);
  for (std::size_t t = 0; t < tmpl.length(); ++t) {
    if (t > 0) {
      EXPECT_LE(tmpl.expected_scores[t - 1], tmpl.expected_scores[t]);
    }
    for (auto r : tmpl.subsets[t]) {
      EXPECT_EQ(std::count(tmpl.subsets[t].begin(), tmpl.subsets[t].end(), 19 - r), 0);
    }
  }
}

TEST(Template, InstantiateToyExample) {
  const auto tmpl = build_template(2, 10.0, 8);
  EXPECT_EQ(instantiate(tmpl, toy_geometry()).probes, toy_sequence());
}

TEST(Template, IndependentOfGeometry) {
  std::mt19937_64 gen(8);
  const auto a = build_template(6, 8.0, 50);
  const auto b = build_template(6, 8.0, 50);
  EXPECT_EQ(a, b);
  const auto s1 = instantiate(a, oracle::random_geometry(6, 8.0, gen));
  const auto s2 = instantiate(a, oracle::random_geometry(6, 8.0, gen));
  EXPECT_EQ(s1.scores, s2.scores);
}

TEST(Template, DegenerateGeometryStillDistinct) {
  const EpicenterGeometry g(8.0, std::vector<double>(5, 4.0));
  const auto seq = instantiate(build_template(5, 8.0, 242), g);
  EXPECT_EQ(seq.size(), 243U);
  std::set<PV> distinct(seq.probes.begin(), seq.probes.end());
  EXPECT_EQ(distinct.size(), 243U);
  EXPECT_EQ(std::count(seq.probes.begin(), seq.probes.end(), PV(5, 0)), 1);
}

TEST(Template, OverlapWithOptimalIsReported) {
  std::mt19937_64 gen(9);
  const auto tmpl = build_template(10, 8.0, 30);
  const LandingModel model(HashFamilyKind::kRandomWalk, 8.0);
  double shared = 0.0;
  constexpr int kGeometries = 1000;
  for (int i = 0; i < kGeometries; ++i) {
    const auto g = oracle::random_geometry(10, 8.0, gen);
    const auto t = instantiate(tmpl, g).probes;
    const auto o = optimal_sequence(model, g, 30).probes;
    const std::set<PV> top(o.begin() + 1, o.end());
    for (std::size_t k = 1; k < t.size(); ++k) shared += top.count(t[k]) ? 1.0 : 0.0;
  }
  shared /= kGeometries;
  RecordProperty("mean_shared_of_top30", std::to_string(shared));
  EXPECT_GT(shared, 0.0);
}

TEST(SuccessProb, EpicenterOnlyAveragesToCollisionPower) {
  std::mt19937_64 gen(3);
  constexpr int kSamples = 20000;
  double sum = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const auto g = oracle::random_geometry(4, 8.0, gen);
    sum += total_success_prob(HashFamilyKind::kRandomWalk, g, 6.0, optimal_sequence(HashFamilyKind::kRandomWalk, g, 6.0, 0));
  }
  const double expected = std::pow(collision_probability(6, 8), 4);
  EXPECT_NEAR(sum / kSamples, expected, 0.02 * expected);
}

TEST(SuccessProb, FullNeighborhoodAtMostOne) {
  std::mt19937_64 gen(4);
  for (auto kind : {HashFamilyKind::kRandomWalk, HashFamilyKind::kCauchyProjection,
                    HashFamilyKind::kGaussianProjection}) {
    const auto g = oracle::random_geometry(4, 8.0, gen);
    const double p = total_success_prob(kind, g, 4.0, optimal_sequence(kind, g, 4.0, 80));
    EXPECT_LE(p, 1.0 + 1e-12);
    EXPECT_GT(p, 0.0);
  }
}

TEST(SuccessProb, MonotoneInTAndDistance) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_geometry(10, 8.0, gen);
    double prev_d = 2.0;
    for (double d : {6.0, 8.0, 12.0, 16.0}) {
      const LandingModel model(HashFamilyKind::kRandomWalk, d);
      const auto cum = cumulative_success_prob(model, g, optimal_sequence(model, g, 100));
      EXPECT_TRUE(std::is_sorted(cum.begin(), cum.end()));
      EXPECT_LE(cum.back(), prev_d + 1e-12);
      prev_d = cum.back();
    }
  }
}

TEST(RankFaces, CauchyIsUnimodalAroundEpicenter) {
  std::mt19937_64 gen(10);
  const LandingModel model(HashFamilyKind::kCauchyProjection, 8.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = oracle::random_geometry(1, 20.0, gen);
    const double p0 = model.bucket(g.x_minus(0), 20.0, 0);
    EXPECT_GE(p0, model.bucket(g.x_minus(0), 20.0, -1));
    EXPECT_GE(p0, model.bucket(g.x_minus(0), 20.0, 1));
  }
}

}  // namespace
}  // namespace rwlsh
