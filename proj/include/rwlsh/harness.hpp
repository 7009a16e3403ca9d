// SPDX-License-Identifier: Apache-2.0

// Success-probability simulation, table-count arithmetic, LSH quality, a
// seeded synthetic corpus, and the evaluation loop behind the CLI.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwlsh/core.hpp"
#include "rwlsh/hash_family.hpp"
#include "rwlsh/index.hpp"
#include "rwlsh/query.hpp"

namespace rwlsh {

inline constexpr int kReportSchemaVersion = 1;

struct SimulationSpec {
  HashFamilyKind kind = HashFamilyKind::kRandomWalk;
  std::size_t functions = 10;
  double width = 8.0;
  std::vector<double> distances;
  std::vector<std::size_t> probes;  // T values
  std::size_t runs = 1000;
  std::uint64_t seed = 0;
  SequenceMode mode = SequenceMode::kOptimal;  // kOptimal, kSubsetSum or kTemplate
  /// Random-walk cells whose standard error exceeds this get more runs.
  double max_std_error = 0.01;
};

void validate(const SimulationSpec& spec);

struct SimulationCell {
  double distance = 0.0;
  std::size_t probes = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;
};

struct SimulationReport {
  SimulationSpec spec;
  std::vector<SimulationCell> cells;  // distance-major, then T
  std::size_t runs = 0;               // after any automatic raise

  const SimulationCell& cell(double distance, std::size_t probes) const;
};

/// Each run draws x_i(-1) ~ Uniform(0, W) for i = 1..M from
/// derive_seed(seed, {run}), builds the probing sequence for the mode and adds
/// up the exact bucket probabilities of its first T + 1 buckets. The same
/// geometry serves every (d, T) cell of the run. Parallel over runs.
SimulationReport simulate_success_prob(const SimulationSpec& spec);

namespace reference {
SimulationReport simulate_success_prob(const SimulationSpec& spec);
}  // namespace reference

/// Smallest L with 1 - (1 - P)^L >= target. P >= 1 gives 1.
std::size_t tables_needed(double per_table, double target);

struct QualityParams {
  HashFamilyKind kind = HashFamilyKind::kRandomWalk;
  double width = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double rho = 0.0;
  std::string method;  // how p was evaluated
};

/// p from the family's collision probability: the walk convolution for the
/// random walk, closed forms for the Cauchy and Gaussian projections.
QualityParams quality(HashFamilyKind kind, double width, double r1, double r2);

/// Collision probability of one bucketized function at distance d.
double family_collision_probability(HashFamilyKind kind, double width, double distance);

struct SyntheticSpec {
  std::size_t points = 20000;
  std::size_t queries = 200;
  std::size_t dim = 32;
  std::size_t clusters = 100;
  Coord spread = 20;      // per-coordinate noise amplitude around a center
  Coord universe = 1000;  // centers lie in [spread, universe - spread]
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  RawDataset data;
  RawDataset queries;
};

/// Clustered even-integer points; queries are fresh draws from the same
/// clusters. Coordinates are already valid normalized values.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

struct ExperimentConfig {
  std::string name;
  IndexConfig index;
  QueryParams query;
};

struct ExperimentResult {
  ExperimentConfig config;
  double recall = 0.0;
  double overall_ratio = 0.0;
  std::size_t ratio_exclusions = 0;
  std::size_t short_results = 0;
  double mean_candidates = 0.0;
  double mean_buckets = 0.0;
  std::size_t index_bytes = 0;
  std::size_t walk_table_bytes = 0;
  double mean_query_ms = 0.0;  // timing
  double build_ms = 0.0;       // timing
};

struct ExperimentReport {
  std::size_t k = 0;
  std::size_t queries = 0;
  std::vector<ExperimentResult> results;
  double oracle_ms = 0.0;  // timing
};

/// Computes exact k-NN once, then builds and queries every config.
ExperimentReport run_experiment(std::shared_ptr<const NormalizedDataset> data,
                                const std::vector<std::vector<Coord>>& queries,
                                const std::vector<ExperimentConfig>& configs, std::size_t k);

/// Reports carry "schema_version"; wall-clock figures live under "timing"
/// keys so they can be stripped before comparing reruns.
nlohmann::ordered_json to_json(const SimulationReport& report);
nlohmann::ordered_json to_json(const ExperimentReport& report);
nlohmann::ordered_json to_json(const QualityParams& quality);
nlohmann::ordered_json to_json(const IndexConfig& config);

/// Removes every "timing" member, recursively.
nlohmann::ordered_json strip_timing(nlohmann::ordered_json report);

}  // namespace rwlsh
