// SPDX-License-Identifier: Apache-2.0

// Bucketized hash functions h(s) = floor((f(s) + b) / W) for the random-walk,
// Cauchy-projection and Gaussian-projection raw hashes, plus the per-dimension
// probability that a point at a given distance lands in a neighboring bucket.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rwlsh/core.hpp"
#include "rwlsh/walk.hpp"

namespace rwlsh {

enum class HashFamilyKind : std::uint8_t {
  kRandomWalk = 0,
  kCauchyProjection = 1,
  kGaussianProjection = 2,
};

std::string_view kind_name(HashFamilyKind kind) noexcept;
/// Accepts "rw", "cp", "gp" and the long names returned by kind_name.
HashFamilyKind parse_kind(std::string_view text);

using BucketKey = std::vector<std::int64_t>;
/// Per-function bucket offset relative to the epicenter bucket, each in {-1, 0, +1}.
using PerturbationVector = std::vector<std::int8_t>;

/// M hash functions of one table.
class LshFunctionVector {
 public:
  LshFunctionVector() = default;
  /// Validates shapes: M offsets in [0, W], an M x m finite projection matrix
  /// for the projection families, or a walk set covering `walk_table_index`
  /// with M functions for the random walk.
  LshFunctionVector(HashFamilyKind kind, std::size_t dim, double width, std::uint64_t seed,
                    std::vector<double> offsets, std::vector<double> projections,
                    std::shared_ptr<const RandomWalkTable> walks, std::size_t walk_table_index);

  HashFamilyKind kind() const noexcept { return kind_; }
  std::size_t functions() const noexcept { return offsets_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double width() const noexcept { return width_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<double>& offsets() const noexcept { return offsets_; }
  /// Row-major M x m projection matrix; empty for the random-walk family.
  const std::vector<double>& projections() const noexcept { return projections_; }
  const std::shared_ptr<const RandomWalkTable>& walks() const noexcept { return walks_; }
  std::size_t walk_table_index() const noexcept { return walk_table_index_; }

  /// f_i(s) + b_i.
  double shifted_raw(std::size_t fn, std::span<const Coord> point) const;
  double shifted_raw(std::size_t fn, std::span<const double> point) const;

  bool operator==(const LshFunctionVector& other) const;

 private:
  HashFamilyKind kind_ = HashFamilyKind::kRandomWalk;
  std::size_t dim_ = 0;
  double width_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> offsets_;
  std::vector<double> projections_;
  std::shared_ptr<const RandomWalkTable> walks_;
  std::size_t walk_table_index_ = 0;
};

/// Draws M functions. Offsets b_i ~ Uniform[0, W); Cauchy entries are
/// tan(pi (u - 1/2)); Gaussian entries are standard normal. The random-walk
/// family needs `walk_caps` and builds a private one-table walk set; W must then
/// be a positive even integer.
LshFunctionVector sample_family(HashFamilyKind kind, std::size_t dim, std::size_t functions, double width,
                                std::uint64_t seed, std::span<const Coord> walk_caps = {});

/// Random-walk family over table `table_index` of a shared walk set.
LshFunctionVector make_random_walk_family(std::shared_ptr<const RandomWalkTable> walks, std::size_t table_index,
                                          double width, std::uint64_t seed);

/// Distances from the epicenter f(q) + b to the two faces of the epicenter
/// bucket, per function: x(-1) = frac((f + b) / W) W and x(+1) = W - x(-1).
class EpicenterGeometry {
 public:
  EpicenterGeometry() = default;
  /// Throws kInvalidArgument unless every entry lies in [0, W].
  EpicenterGeometry(double width, std::vector<double> to_lower_face);
  /// Accepts a geometry given by both faces; they must sum to W.
  static EpicenterGeometry from_faces(double width, std::span<const double> x_minus,
                                      std::span<const double> x_plus);

  double width() const noexcept { return width_; }
  std::size_t functions() const noexcept { return lower_.size(); }
  double x_minus(std::size_t i) const noexcept { return lower_[i]; }
  double x_plus(std::size_t i) const noexcept { return width_ - lower_[i]; }
  /// x_i(delta): 0 for delta = 0.
  double face_distance(std::size_t i, int delta) const noexcept {
    return delta < 0 ? x_minus(i) : (delta > 0 ? x_plus(i) : 0.0);
  }

 private:
  double width_ = 0.0;
  std::vector<double> lower_;
};

struct Projection {
  BucketKey key;
  EpicenterGeometry geometry;
};

BucketKey hash_point(const LshFunctionVector& fv, std::span<const Coord> point);
EpicenterGeometry epicenter_geometry(const LshFunctionVector& fv, std::span<const Coord> query);
/// Key and geometry in one pass.
Projection project(const LshFunctionVector& fv, std::span<const Coord> query);

/// Probability that the raw-hash difference of two points at distance d falls
/// in [lo, hi). d is an L1 distance (even integer for the random walk) or, for
/// the Gaussian family, an L2 distance.
class LandingModel {
 public:
  LandingModel(HashFamilyKind kind, double distance);

  HashFamilyKind kind() const noexcept { return kind_; }
  double distance() const noexcept { return distance_; }
  double interval(double lo, double hi) const;
  /// Pr[h(s) - h(q) = delta] for one function with lower-face distance x_minus.
  double bucket(double x_minus, double width, std::int64_t delta) const;

 private:
  HashFamilyKind kind_;
  double distance_;
  std::optional<WalkDistribution> walk_;
};

/// Per-function landing probability for delta in {-1, 0, +1}. Intervals are
/// half-open to match floor bucketing.
double per_dim_landing_prob(HashFamilyKind kind, double x_minus, double x_plus, double width, int delta,
                            double distance);

/// Mass outside the 3-bucket neighborhood of one function: both |delta| >= 2 tails.
double per_dim_tail_prob(HashFamilyKind kind, double x_minus, double width, double distance);

/// Product of per-function landing probabilities (the functions are independent).
double bucket_success_prob(HashFamilyKind kind, const EpicenterGeometry& geometry, const PerturbationVector& delta,
                           double distance);
double bucket_success_prob(const LandingModel& model, const EpicenterGeometry& geometry,
                           const PerturbationVector& delta);

}  // namespace rwlsh
