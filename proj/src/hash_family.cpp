// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/hash_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rwlsh/error.hpp"
#include "rwlsh/random.hpp"

namespace rwlsh {

namespace {

// Sub-seed tags.
constexpr std::uint64_t kOffsetStream = 1;
constexpr std::uint64_t kProjectionStream = 2;
constexpr std::uint64_t kWalkStream = 3;

bool is_even_integer(double w) { return w >= 2.0 && std::floor(w) == w && std::fmod(w, 2.0) == 0.0; }

std::vector<double> sample_offsets(std::size_t functions, double width, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kOffsetStream}));
  std::vector<double> offsets(functions);
  for (auto& b : offsets) {
    b = width * rng.uniform();
  }
  return offsets;
}

double normal_interval(double lo, double hi, double sigma) {
  const double a = lo / (sigma * std::numbers::sqrt2);
  const double b = hi / (sigma * std::numbers::sqrt2);
  // Work in the tail that keeps precision.
  if (a >= 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
  if (b <= 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
  return 1.0 - 0.5 * (std::erfc(b) + std::erfc(-a));
}

double cauchy_interval(double lo, double hi, double scale) {
  const double a = lo / scale;
  const double b = hi / scale;
  if (std::isinf(a) || std::isinf(b)) {
    const double ta = std::isinf(a) ? std::copysign(std::numbers::pi / 2, a) : std::atan(a);
    const double tb = std::isinf(b) ? std::copysign(std::numbers::pi / 2, b) : std::atan(b);
    return (tb - ta) / std::numbers::pi;
  }
  if (a * b > 0.0) {
    // Same side of zero: atan(b) - atan(a) = atan((b - a) / (1 + ab)) without cancellation.
    return std::atan((b - a) / (1.0 + a * b)) / std::numbers::pi;
  }
  return (std::atan(b) - std::atan(a)) / std::numbers::pi;
}

}  // namespace

std::string_view kind_name(HashFamilyKind kind) noexcept {
  switch (kind) {
    case HashFamilyKind::kRandomWalk: return "random_walk";
    case HashFamilyKind::kCauchyProjection: return "cauchy";
    case HashFamilyKind::kGaussianProjection: return "gaussian";
  }
  return "unknown";
}

HashFamilyKind parse_kind(std::string_view text) {
  if (text == "rw" || text == "random_walk") return HashFamilyKind::kRandomWalk;
  if (text == "cp" || text == "cauchy") return HashFamilyKind::kCauchyProjection;
  if (text == "gp" || text == "gaussian") return HashFamilyKind::kGaussianProjection;
  fail(ErrorCategory::kInvalidArgument, "unknown hash family '" + std::string(text) + "'");
}

LshFunctionVector::LshFunctionVector(HashFamilyKind kind, std::size_t dim, double width, std::uint64_t seed,
                                     std::vector<double> offsets, std::vector<double> projections,
                                     std::shared_ptr<const RandomWalkTable> walks, std::size_t walk_table_index)
    : kind_(kind),
      dim_(dim),
      width_(width),
      seed_(seed),
      offsets_(std::move(offsets)),
      projections_(std::move(projections)),
      walks_(std::move(walks)),
      walk_table_index_(walk_table_index) {
  require(dim_ >= 1, ErrorCategory::kInvalidArgument, "hash family needs a positive dimension");
  require(!offsets_.empty(), ErrorCategory::kInvalidArgument, "hash family needs at least one function");
  require(std::isfinite(width_) && width_ > 0.0, ErrorCategory::kInvalidArgument, "bucket width must be positive");
  for (double b : offsets_) {
    require(b >= 0.0 && b <= width_, ErrorCategory::kInvalidArgument, "offset outside [0, W]");
  }
  if (kind_ == HashFamilyKind::kRandomWalk) {
    require(is_even_integer(width_), ErrorCategory::kInvalidArgument,
            "random-walk bucket width must be a positive even integer");
    require(walks_ != nullptr && walks_->dim() == dim_ && walks_->functions() == offsets_.size() &&
                walk_table_index_ < walks_->tables(),
            ErrorCategory::kInvalidArgument, "walk set does not match the family shape");
    projections_.clear();
  } else {
    require(projections_.size() == offsets_.size() * dim_, ErrorCategory::kInvalidArgument,
            "projection matrix has the wrong shape");
    for (double e : projections_) {
      require(std::isfinite(e), ErrorCategory::kInvalidArgument, "non-finite projection entry");
    }
    walks_.reset();
    walk_table_index_ = 0;
  }
}

double LshFunctionVector::shifted_raw(std::size_t fn, std::span<const Coord> point) const {
  if (kind_ == HashFamilyKind::kRandomWalk) {
    return static_cast<double>(raw_hash(*walks_, walk_table_index_, fn, point)) + offsets_[fn];
  }
  require(point.size() == dim_, ErrorCategory::kDimensionMismatch, "hash: dimension mismatch");
  const double* eta = projections_.data() + fn * dim_;
  double dot = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    dot += eta[i] * static_cast<double>(point[i]);
  }
  return dot + offsets_[fn];
}

double LshFunctionVector::shifted_raw(std::size_t fn, std::span<const double> point) const {
  require(kind_ != HashFamilyKind::kRandomWalk, ErrorCategory::kInvalidArgument,
          "random-walk hashing needs normalized integer coordinates");
  require(point.size() == dim_, ErrorCategory::kDimensionMismatch, "hash: dimension mismatch");
  const double* eta = projections_.data() + fn * dim_;
  double dot = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    dot += eta[i] * point[i];
  }
  return dot + offsets_[fn];
}

bool LshFunctionVector::operator==(const LshFunctionVector& other) const {
  const bool same_walks = (walks_ == nullptr && other.walks_ == nullptr) ||
                          (walks_ != nullptr && other.walks_ != nullptr && *walks_ == *other.walks_);
  return kind_ == other.kind_ && dim_ == other.dim_ && width_ == other.width_ && seed_ == other.seed_ &&
         offsets_ == other.offsets_ && projections_ == other.projections_ && same_walks &&
         walk_table_index_ == other.walk_table_index_;
}

LshFunctionVector sample_family(HashFamilyKind kind, std::size_t dim, std::size_t functions, double width,
                                std::uint64_t seed, std::span<const Coord> walk_caps) {
  require(functions >= 1, ErrorCategory::kInvalidArgument, "M must be at least 1");
  require(dim >= 1, ErrorCategory::kInvalidArgument, "dimension must be positive");
  require(std::isfinite(width) && width > 0.0, ErrorCategory::kInvalidArgument, "bucket width must be positive");
  if (kind == HashFamilyKind::kRandomWalk) {
    require(is_even_integer(width), ErrorCategory::kInvalidArgument,
            "random-walk bucket width must be a positive even integer");
    require(walk_caps.size() == dim, ErrorCategory::kDimensionMismatch,
            "random-walk family needs one universe cap per dimension");
    auto walks = std::make_shared<const RandomWalkTable>(
        build_walk_table(walk_caps, functions, 1, derive_seed(seed, {kWalkStream})));
    return make_random_walk_family(std::move(walks), 0, width, seed);
  }

  Rng rng(derive_seed(seed, {kProjectionStream}));
  std::vector<double> projections(functions * dim);
  for (auto& e : projections) {
    e = kind == HashFamilyKind::kCauchyProjection ? rng.cauchy() : rng.normal();
  }
  return LshFunctionVector(kind, dim, width, seed, sample_offsets(functions, width, seed), std::move(projections),
                           nullptr, 0);
}

LshFunctionVector make_random_walk_family(std::shared_ptr<const RandomWalkTable> walks, std::size_t table_index,
                                          double width, std::uint64_t seed) {
  require(walks != nullptr, ErrorCategory::kInvalidArgument, "missing walk set");
  const std::size_t functions = walks->functions();
  const std::size_t dim = walks->dim();
  return LshFunctionVector(HashFamilyKind::kRandomWalk, dim, width, seed, sample_offsets(functions, width, seed), {},
                           std::move(walks), table_index);
}

EpicenterGeometry::EpicenterGeometry(double width, std::vector<double> to_lower_face)
    : width_(width), lower_(std::move(to_lower_face)) {
  require(std::isfinite(width_) && width_ > 0.0, ErrorCategory::kInvalidArgument, "geometry width must be positive");
  for (double x : lower_) {
    require(x >= 0.0 && x <= width_, ErrorCategory::kInvalidArgument, "face distance outside [0, W]");
  }
}

EpicenterGeometry EpicenterGeometry::from_faces(double width, std::span<const double> x_minus,
                                                std::span<const double> x_plus) {
  require(x_minus.size() == x_plus.size(), ErrorCategory::kDimensionMismatch, "face lists differ in length");
  for (std::size_t i = 0; i < x_minus.size(); ++i) {
    require(std::abs(x_minus[i] + x_plus[i] - width) <= 1e-9 * std::max(1.0, width), ErrorCategory::kInvalidArgument,
            "faces of function " + std::to_string(i) + " do not sum to W");
  }
  return EpicenterGeometry(width, std::vector<double>(x_minus.begin(), x_minus.end()));
}

Projection project(const LshFunctionVector& fv, std::span<const Coord> query) {
  Projection out;
  out.key.resize(fv.functions());
  std::vector<double> lower(fv.functions());
  const double w = fv.width();
  for (std::size_t i = 0; i < fv.functions(); ++i) {
    const double shifted = fv.shifted_raw(i, query);
    const double bucket = std::floor(shifted / w);
    out.key[i] = static_cast<std::int64_t>(bucket);
    lower[i] = std::clamp(shifted - bucket * w, 0.0, w);
  }
  out.geometry = EpicenterGeometry(w, std::move(lower));
  return out;
}

BucketKey hash_point(const LshFunctionVector& fv, std::span<const Coord> point) {
  BucketKey key(fv.functions());
  for (std::size_t i = 0; i < fv.functions(); ++i) {
    key[i] = static_cast<std::int64_t>(std::floor(fv.shifted_raw(i, point) / fv.width()));
  }
  return key;
}

EpicenterGeometry epicenter_geometry(const LshFunctionVector& fv, std::span<const Coord> query) {
  return project(fv, query).geometry;
}

LandingModel::LandingModel(HashFamilyKind kind, double distance) : kind_(kind), distance_(distance) {
  require(std::isfinite(distance) && distance > 0.0, ErrorCategory::kInvalidArgument,
          "landing model needs a positive distance");
  if (kind_ == HashFamilyKind::kRandomWalk) {
    require(std::floor(distance) == distance && std::fmod(distance, 2.0) == 0.0, ErrorCategory::kInvalidArgument,
            "random-walk distance must be an even integer");
    if (distance <= static_cast<double>(kExactPmfMaxSteps)) {
      walk_.emplace(static_cast<std::int64_t>(distance));
    }
  }
}

double LandingModel::interval(double lo, double hi) const {
  switch (kind_) {
    case HashFamilyKind::kRandomWalk:
      return walk_ ? walk_->interval(lo, hi) : interval_probability(static_cast<std::int64_t>(distance_), lo, hi);
    case HashFamilyKind::kCauchyProjection:
      return cauchy_interval(lo, hi, distance_);
    case HashFamilyKind::kGaussianProjection:
      return normal_interval(lo, hi, distance_);
  }
  return 0.0;
}

double LandingModel::bucket(double x_minus, double width, std::int64_t delta) const {
  const double lo = -x_minus + static_cast<double>(delta) * width;
  return interval(lo, lo + width);
}

double per_dim_landing_prob(HashFamilyKind kind, double x_minus, double x_plus, double width, int delta,
                            double distance) {
  require(delta >= -1 && delta <= 1, ErrorCategory::kInvalidArgument, "perturbation must be -1, 0 or +1");
  require(std::abs(x_minus + x_plus - width) <= 1e-9 * std::max(1.0, width), ErrorCategory::kInvalidArgument,
          "face distances must sum to W");
  return LandingModel(kind, distance).bucket(x_minus, width, delta);
}

double per_dim_tail_prob(HashFamilyKind kind, double x_minus, double width, double distance) {
  const LandingModel model(kind, distance);
  const double inf = std::numeric_limits<double>::infinity();
  return model.interval(-inf, -x_minus - width) + model.interval(-x_minus + 2.0 * width, inf);
}

double bucket_success_prob(const LandingModel& model, const EpicenterGeometry& geometry,
                           const PerturbationVector& delta) {
  require(delta.size() == geometry.functions(), ErrorCategory::kDimensionMismatch,
          "perturbation length does not match M");
  double p = 1.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    require(delta[i] >= -1 && delta[i] <= 1, ErrorCategory::kInvalidArgument, "perturbation must be -1, 0 or +1");
    p *= model.bucket(geometry.x_minus(i), geometry.width(), delta[i]);
  }
  return p;
}

double bucket_success_prob(HashFamilyKind kind, const EpicenterGeometry& geometry, const PerturbationVector& delta,
                           double distance) {
  return bucket_success_prob(LandingModel(kind, distance), geometry, delta);
}

}  // namespace rwlsh
