// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rwlsh/error.hpp"
#include "rwlsh/hash_family.hpp"
#include "rwlsh/walk.hpp"

namespace rwlsh {
namespace {

constexpr HashFamilyKind kAllKinds[] = {HashFamilyKind::kRandomWalk, HashFamilyKind::kCauchyProjection,
                                        HashFamilyKind::kGaussianProjection};

TEST(Kind, NamesRoundTrip) {
  for (auto kind : kAllKinds) EXPECT_EQ(parse_kind(kind_name(kind)), kind);
  EXPECT_EQ(parse_kind("cp"), HashFamilyKind::kCauchyProjection);
  EXPECT_THROW(parse_kind("euclid"), Error);
}

TEST(SampleFamily, DeterministicUnderSeed) {
  const std::vector<Coord> caps{20, 20, 20};
  for (auto kind : kAllKinds) {
    const auto a = sample_family(kind, 3, 4, 8.0, 42, caps);
    const auto b = sample_family(kind, 3, 4, 8.0, 42, caps);
    const auto c = sample_family(kind, 3, 4, 8.0, 43, caps);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == c);
    for (double off : a.offsets()) {
      EXPECT_GE(off, 0.0);
      EXPECT_LT(off, 8.0);
    }
  }
}

TEST(SampleFamily, RandomWalkNeedsEvenWidth) {
  const std::vector<Coord> caps{20};
  EXPECT_THROW(sample_family(HashFamilyKind::kRandomWalk, 1, 2, 7.0, 1, caps), Error);
  EXPECT_THROW(sample_family(HashFamilyKind::kRandomWalk, 1, 2, 8.5, 1, caps), Error);
  EXPECT_NO_THROW(sample_family(HashFamilyKind::kCauchyProjection, 1, 2, 7.5, 1));
}

TEST(SampleFamily, GaussianMoments) {
  const auto fv = sample_family(HashFamilyKind::kGaussianProjection, 1000, 1000, 4.0, 6);
  const auto& e = fv.projections();
  ASSERT_EQ(e.size(), 1000000U);
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  var /= static_cast<double>(e.size() - 1);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(SampleFamily, CauchyQuartiles) {
  const auto fv = sample_family(HashFamilyKind::kCauchyProjection, 1000, 1000, 4.0, 7);
  auto e = fv.projections();
  const auto at = [&e](double q) {
    auto it = e.begin() + static_cast<std::ptrdiff_t>(q * static_cast<double>(e.size()));
    std::nth_element(e.begin(), it, e.end());
    return *it;
  };
  const double median = at(0.5);
  const double iqr = at(0.75) - at(0.25);
  EXPECT_NEAR(median, 0.0, 0.01);
  EXPECT_NEAR(iqr, 2.0, 0.04);
}

TEST(HashPoint, SubWidthValuesGiveZeroKey) {
  const LshFunctionVector fv(HashFamilyKind::kGaussianProjection, 2, 10.0, 0, {0.0, 3.5, 9.99},
                             std::vector<double>(6, 0.0), nullptr, 0);
  const std::vector<Coord> p{100, 42};
  EXPECT_EQ(hash_point(fv, p), (BucketKey{0, 0, 0}));
}

TEST(HashPoint, MatchesFloorDefinition) {
  const auto fv = sample_family(HashFamilyKind::kCauchyProjection, 4, 6, 5.0, 12);
  const std::vector<Coord> p{2, 40, 8, 16};
  const auto key = hash_point(fv, p);
  for (std::size_t i = 0; i < 6; ++i) {
    double f = fv.offsets()[i];
    for (std::size_t j = 0; j < 4; ++j) f += fv.projections()[i * 4 + j] * p[j];
    EXPECT_EQ(key[i], static_cast<std::int64_t>(std::floor(f / 5.0)));
  }
}

TEST(HashPoint, IdenticalPointsShareKeys) {
  const std::vector<Coord> caps{30, 30};
  for (auto kind : kAllKinds) {
    const auto fv = sample_family(kind, 2, 5, 8.0, 3, caps);
    EXPECT_EQ(hash_point(fv, std::vector<Coord>{4, 28}), hash_point(fv, std::vector<Coord>{4, 28}));
  }
}

TEST(HashPoint, RandomWalkOutOfUniverseThrows) {
  const auto fv = sample_family(HashFamilyKind::kRandomWalk, 2, 2, 8.0, 3, std::vector<Coord>{10, 10});
  EXPECT_THROW(hash_point(fv, std::vector<Coord>{12, 0}), Error);
}

TEST(HashPoint, RandomWalkCollisionRateMatchesCollisionProbability) {
  constexpr int kTrials = 100000;
  for (Coord d : {2, 6}) {
    int hits = 0;
    for (int t = 0; t < kTrials; ++t) {
      const auto fv = sample_family(HashFamilyKind::kRandomWalk, 1, 1, 8.0, static_cast<std::uint64_t>(t) * 7 + d,
                                    std::vector<Coord>{6});
      hits += hash_point(fv, std::vector<Coord>{d}) == hash_point(fv, std::vector<Coord>{0}) ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(hits) / kTrials, collision_probability(d, 8), 0.005) << "d=" << d;
  }
}

TEST(EpicenterGeometry, ToyExampleAccepted) {
  const std::vector<double> xm{1.47, 5.38};
  const std::vector<double> xp{8.53, 4.62};
  const auto g = EpicenterGeometry::from_faces(10.0, xm, xp);
  EXPECT_DOUBLE_EQ(g.x_plus(0), 10.0 - 1.47);
  EXPECT_NEAR(g.x_plus(1), 4.62, 1e-12);
  EXPECT_THROW(EpicenterGeometry::from_faces(10.0, xm, std::vector<double>{8.0, 4.62}), Error);
  EXPECT_THROW(EpicenterGeometry(10.0, {-0.1}), Error);
  EXPECT_THROW(EpicenterGeometry(10.0, {10.1}), Error);
}

TEST(EpicenterGeometry, ExactMultipleSitsOnLowerFace) {
  const LshFunctionVector fv(HashFamilyKind::kCauchyProjection, 1, 5.0, 0, {0.0}, {1.0}, nullptr, 0);
  const auto g = epicenter_geometry(fv, std::vector<Coord>{10});
  EXPECT_EQ(g.x_minus(0), 0.0);
  EXPECT_EQ(g.x_plus(0), 5.0);
}

TEST(EpicenterGeometry, FractionalPartAndFaceSum) {
  const auto fv = sample_family(HashFamilyKind::kGaussianProjection, 3, 4, 6.0, 19);
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<Coord> pick(0, 500);
  for (int q = 0; q < 10000; ++q) {
    const std::vector<Coord> p{2 * pick(gen), 2 * pick(gen), 2 * pick(gen)};
    const auto proj = project(fv, p);
    for (std::size_t i = 0; i < 4; ++i) {
      const double shifted = fv.shifted_raw(i, std::span<const Coord>(p));
      const double frac = shifted / 6.0 - std::floor(shifted / 6.0);
      ASSERT_NEAR(proj.geometry.x_minus(i), frac * 6.0, 1e-9);
      ASSERT_DOUBLE_EQ(proj.geometry.x_minus(i) + proj.geometry.x_plus(i), 6.0);
    }
  }
}

TEST(LandingProb, TotalProbabilityIsOne) {
  for (auto kind : kAllKinds) {
    for (double xm : {0.0, 0.7, 4.0, 7.3, 8.0}) {
      const double total = per_dim_landing_prob(kind, xm, 8.0 - xm, 8.0, -1, 6.0) +
                           per_dim_landing_prob(kind, xm, 8.0 - xm, 8.0, 0, 6.0) +
                           per_dim_landing_prob(kind, xm, 8.0 - xm, 8.0, 1, 6.0) +
                           per_dim_tail_prob(kind, xm, 8.0, 6.0);
      EXPECT_NEAR(total, 1.0, 1e-10) << kind_name(kind) << " " << xm;
    }
  }
}

TEST(LandingProb, GaussianSymmetricGeometry) {
  EXPECT_NEAR(per_dim_landing_prob(HashFamilyKind::kGaussianProjection, 3.0, 3.0, 6.0, 1, 4.0),
              per_dim_landing_prob(HashFamilyKind::kGaussianProjection, 3.0, 3.0, 6.0, -1, 4.0), 1e-15);
}

TEST(LandingProb, RandomWalkEnumeratesPmf) {
  const double expected = walk_pmf(6, -4) + walk_pmf(6, -2) + walk_pmf(6, 0) + walk_pmf(6, 2);
  EXPECT_NEAR(per_dim_landing_prob(HashFamilyKind::kRandomWalk, 4.0, 4.0, 8.0, 0, 6.0), expected, 1e-15);
}

TEST(LandingProb, CauchyArctanForm) {
  for (double xp : {0.5, 3.0, 9.0}) {
    const double expected = (std::atan((xp + 10.0) / 7.0) - std::atan(xp / 7.0)) / std::numbers::pi;
    EXPECT_NEAR(per_dim_landing_prob(HashFamilyKind::kCauchyProjection, 10.0 - xp, xp, 10.0, 1, 7.0), expected,
                1e-14);
  }
}

TEST(LandingProb, CauchyMatchesMonteCarlo) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kSamples = 200000;
  const double xm = 6.5;
  const double w = 20.0;
  const double d = 8.0;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < kSamples; ++i) {
    const double y = d * std::tan(std::numbers::pi * (u(gen) - 0.5));
    const double delta = std::floor((xm + y) / w);
    if (delta >= -1 && delta <= 1) ++counts[static_cast<int>(delta) + 1];
  }
  for (int delta = -1; delta <= 1; ++delta) {
    EXPECT_NEAR(static_cast<double>(counts[delta + 1]) / kSamples,
                per_dim_landing_prob(HashFamilyKind::kCauchyProjection, xm, w - xm, w, delta, d), 0.004);
  }
}

TEST(LandingProb, GaussianIntegrandEnvelope) {
  const auto phi = [](double z) { return std::exp(-z * z / 2.0) / std::sqrt(2.0 * std::numbers::pi); };
  for (double d : {2.0, 5.0, 12.0}) {
    for (double xp : {0.0, 1.0, 3.5, 6.0}) {
      const double w = 6.0;
      const double p = per_dim_landing_prob(HashFamilyKind::kGaussianProjection, w - xp, xp, w, 1, d);
      EXPECT_GE(p, w * phi((xp + w) / d) / d - 1e-15);
      EXPECT_LE(p, w * phi(xp / d) / d + 1e-15);
    }
  }
}

TEST(LandingProb, RejectsBadDelta) {
  EXPECT_THROW(per_dim_landing_prob(HashFamilyKind::kCauchyProjection, 1.0, 7.0, 8.0, 2, 4.0), Error);
  EXPECT_THROW(per_dim_landing_prob(HashFamilyKind::kRandomWalk, 1.0, 7.0, 8.0, 0, 5.0), Error);
}

TEST(BucketSuccess, EpicenterAverageIsCollisionToTheM) {
  std::mt19937_64 gen(21);
  constexpr int kSamples = 100000;
  const LandingModel model(HashFamilyKind::kRandomWalk, 6.0);
  const PerturbationVector zero(3, 0);
  double sum = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    sum += bucket_success_prob(model, oracle::random_geometry(3, 8.0, gen), zero);
  }
  const double expected = std::pow(collision_probability(6, 8), 3);
  EXPECT_NEAR(sum / kSamples, expected, 0.01 * expected);
}

TEST(BucketSuccess, NeighborhoodMatchesTwoDimensionalMonteCarlo) {
  const EpicenterGeometry g(8.0, {2.5, 6.0});
  const LandingModel model(HashFamilyKind::kRandomWalk, 10.0);
  double analytic = 0.0;
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      const double p = bucket_success_prob(model, g, {static_cast<std::int8_t>(a), static_cast<std::int8_t>(b)});
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
      analytic += p;
    }
  }
  std::mt19937_64 gen(5);
  constexpr int kSamples = 100000;
  int inside = 0;
  for (int s = 0; s < kSamples; ++s) {
    bool ok = true;
    for (std::size_t i = 0; i < 2; ++i) {
      const std::uint64_t bits = gen();
      int y = 0;
      for (int k = 0; k < 10; ++k) y += ((bits >> k) & 1U) ? 1 : -1;
      const double delta = std::floor((g.x_minus(i) + y) / 8.0);
      ok = ok && delta >= -1 && delta <= 1;
    }
    inside += ok ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(inside) / kSamples, analytic, 0.005);
}

}  // namespace
}  // namespace rwlsh
