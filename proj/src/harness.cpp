// SPDX-License-Identifier: Apache-2.0

#include "rwlsh/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>

#include "rwlsh/error.hpp"
#include "rwlsh/multiprobe.hpp"
#include "rwlsh/random.hpp"
#include "rwlsh/walk.hpp"

namespace rwlsh {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Everything a run needs that does not depend on the sampled geometry.
struct SimulationSetup {
  std::vector<LandingModel> models;
  std::optional<Template> tmpl;
  std::size_t max_probes = 0;
  std::size_t cells = 0;
};

SimulationSetup make_setup(const SimulationSpec& spec) {
  SimulationSetup setup;
  for (double d : spec.distances) {
    setup.models.emplace_back(spec.kind, d);
  }
  setup.max_probes = *std::max_element(spec.probes.begin(), spec.probes.end());
  if (spec.mode == SequenceMode::kTemplate) {
    setup.tmpl = build_template(spec.functions, spec.width, setup.max_probes);
  }
  setup.cells = spec.distances.size() * spec.probes.size();
  return setup;
}

void run_once(const SimulationSpec& spec, const SimulationSetup& setup, std::size_t run, double* out) {
  Rng rng(derive_seed(spec.seed, {run}));
  std::vector<double> lower(spec.functions);
  for (auto& x : lower) x = rng.uniform(0.0, spec.width);
  const EpicenterGeometry geometry(spec.width, std::move(lower));

  std::optional<ProbingSequence> shared;
  if (spec.mode == SequenceMode::kTemplate) {
    shared = instantiate(*setup.tmpl, geometry, setup.max_probes);
  } else if (spec.mode == SequenceMode::kSubsetSum) {
    shared = subset_sum_sequence(geometry, setup.max_probes);
  }
  for (std::size_t di = 0; di < setup.models.size(); ++di) {
    const auto& model = setup.models[di];
    const auto sequence = shared ? *shared : optimal_sequence(model, geometry, setup.max_probes);
    const auto cumulative = cumulative_success_prob(model, geometry, sequence);
    for (std::size_t ti = 0; ti < spec.probes.size(); ++ti) {
      const std::size_t last = std::min(spec.probes[ti], cumulative.size() - 1);
      out[di * spec.probes.size() + ti] = cumulative[last];
    }
  }
}

template <bool kParallel>
void run_range(const SimulationSpec& spec, const SimulationSetup& setup, std::size_t begin, std::size_t end,
               std::vector<double>& values) {
  values.resize(end * setup.cells);
  if constexpr (kParallel) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t r = static_cast<std::int64_t>(begin); r < static_cast<std::int64_t>(end); ++r) {
      try {
        run_once(spec, setup, static_cast<std::size_t>(r), values.data() + static_cast<std::size_t>(r) * setup.cells);
      } catch (...) {
#pragma omp critical(rwlsh_sim_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t r = begin; r < end; ++r) {
      run_once(spec, setup, r, values.data() + r * setup.cells);
    }
  }
}

template <bool kParallel>
SimulationReport simulate_impl(const SimulationSpec& spec) {
  validate(spec);
  const auto setup = make_setup(spec);
  std::vector<double> values;
  std::size_t runs = spec.runs;
  run_range<kParallel>(spec, setup, 0, runs, values);

  SimulationReport report;
  report.spec = spec;
  constexpr std::size_t kMaxRaise = 64;
  while (true) {
    report.cells.clear();
    double worst = 0.0;
    for (std::size_t di = 0; di < spec.distances.size(); ++di) {
      for (std::size_t ti = 0; ti < spec.probes.size(); ++ti) {
        const std::size_t c = di * spec.probes.size() + ti;
        // Serial, run-ordered sums keep the report independent of thread count.
        double sum = 0.0;
        for (std::size_t r = 0; r < runs; ++r) sum += values[r * setup.cells + c];
        const double mean = sum / static_cast<double>(runs);
        double ss = 0.0;
        for (std::size_t r = 0; r < runs; ++r) {
          const double dev = values[r * setup.cells + c] - mean;
          ss += dev * dev;
        }
        const double se = runs > 1 ? std::sqrt(ss / static_cast<double>(runs - 1) / static_cast<double>(runs)) : 0.0;
        worst = std::max(worst, se);
        report.cells.push_back({spec.distances[di], spec.probes[ti], mean, se, runs});
      }
    }
    if (spec.kind != HashFamilyKind::kRandomWalk || worst <= spec.max_std_error || runs >= kMaxRaise * spec.runs) {
      break;
    }
    run_range<kParallel>(spec, setup, runs, 2 * runs, values);
    runs *= 2;
  }
  report.runs = runs;
  return report;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

nlohmann::ordered_json strip_impl(nlohmann::ordered_json node) {
  if (node.is_object()) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (it.key() != "timing") out[it.key()] = strip_impl(it.value());
    }
    return out;
  }
  if (node.is_array()) {
    for (auto& child : node) child = strip_impl(std::move(child));
  }
  return node;
}

}  // namespace

void validate(const SimulationSpec& spec) {
  require(spec.runs >= 1, ErrorCategory::kInvalidArgument, "simulation needs at least one run");
  require(spec.functions >= 1 && spec.functions <= 64, ErrorCategory::kInvalidArgument, "simulation needs 1 <= M <= 64");
  require(std::isfinite(spec.width) && spec.width > 0.0, ErrorCategory::kInvalidArgument, "W must be positive");
  require(!spec.distances.empty() && !spec.probes.empty(), ErrorCategory::kInvalidArgument,
          "simulation needs at least one distance and one T");
  require(spec.mode != SequenceMode::kSingle, ErrorCategory::kInvalidArgument,
          "simulation mode must be optimal, subset_sum or template");
  require(spec.max_std_error > 0.0, ErrorCategory::kInvalidArgument, "standard-error bound must be positive");
  for (double d : spec.distances) {
    require(std::isfinite(d) && d >= 0.0, ErrorCategory::kInvalidArgument, "distances must be finite and nonnegative");
    if (spec.kind == HashFamilyKind::kRandomWalk) {
      require(std::floor(d) == d && std::fmod(d, 2.0) == 0.0, ErrorCategory::kInvalidArgument,
              "random-walk distances must be even integers");
    }
  }
  if (spec.kind == HashFamilyKind::kRandomWalk) {
    require(std::floor(spec.width) == spec.width && std::fmod(spec.width, 2.0) == 0.0,
            ErrorCategory::kInvalidArgument, "random-walk W must be a positive even integer");
  }
}

const SimulationCell& SimulationReport::cell(double distance, std::size_t probes) const {
  for (const auto& c : cells) {
    if (c.distance == distance && c.probes == probes) return c;
  }
  fail(ErrorCategory::kOutOfRange, "no simulation cell for the requested (d, T)");
}

SimulationReport simulate_success_prob(const SimulationSpec& spec) { return simulate_impl<true>(spec); }

namespace reference {
SimulationReport simulate_success_prob(const SimulationSpec& spec) { return simulate_impl<false>(spec); }
}  // namespace reference

std::size_t tables_needed(double per_table, double target) {
  require(per_table > 0.0, ErrorCategory::kInvalidArgument, "per-table probability must be positive");
  require(target > 0.0 && target < 1.0, ErrorCategory::kInvalidArgument, "target must lie in (0, 1)");
  if (per_table >= 1.0) return 1;
  // Start from the closed form, then settle rounding at the boundary exactly.
  auto tables = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log1p(-target) / std::log1p(-per_table)) - 1.0));
  while (1.0 - std::pow(1.0 - per_table, static_cast<double>(tables)) < target) ++tables;
  while (tables > 1 && 1.0 - std::pow(1.0 - per_table, static_cast<double>(tables - 1)) >= target) --tables;
  return tables;
}

double family_collision_probability(HashFamilyKind kind, double width, double distance) {
  require(std::isfinite(distance) && distance >= 0.0, ErrorCategory::kInvalidArgument,
          "distance must be finite and nonnegative");
  require(std::isfinite(width) && width > 0.0, ErrorCategory::kInvalidArgument, "W must be positive");
  if (distance == 0.0) return 1.0;
  switch (kind) {
    case HashFamilyKind::kRandomWalk:
      require(std::floor(distance) == distance && std::floor(width) == width, ErrorCategory::kInvalidArgument,
              "random-walk distance and W must be even integers");
      return collision_probability(static_cast<std::int64_t>(distance), static_cast<std::int64_t>(width));
    case HashFamilyKind::kCauchyProjection: {
      const double r = width / distance;
      return 2.0 * std::atan(r) / std::numbers::pi - std::log1p(r * r) / (std::numbers::pi * r);
    }
    case HashFamilyKind::kGaussianProjection: {
      const double r = width / distance;
      return 1.0 - 2.0 * normal_cdf(-r) - 2.0 / (std::sqrt(2.0 * std::numbers::pi) * r) * (1.0 - std::exp(-r * r / 2.0));
    }
  }
  return 0.0;
}

QualityParams quality(HashFamilyKind kind, double width, double r1, double r2) {
  require(r1 > 0.0 && r1 <= r2, ErrorCategory::kInvalidArgument, "radii must satisfy 0 < r1 <= r2");
  QualityParams q;
  q.kind = kind;
  q.width = width;
  q.r1 = r1;
  q.r2 = r2;
  q.p1 = family_collision_probability(kind, width, r1);
  q.p2 = family_collision_probability(kind, width, r2);
  q.method = kind == HashFamilyKind::kRandomWalk ? "exact_walk_convolution" : "closed_form";
  require(q.p1 > 0.0 && q.p1 < 1.0 && q.p2 > 0.0 && q.p2 < 1.0, ErrorCategory::kInvalidArgument,
          "collision probabilities must lie strictly inside (0, 1) to define rho");
  q.rho = r1 == r2 ? 1.0 : std::log(1.0 / q.p1) / std::log(1.0 / q.p2);
  return q;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  require(spec.points >= 1 && spec.dim >= 1 && spec.clusters >= 1, ErrorCategory::kInvalidArgument,
          "synthetic corpus needs points, dimension and clusters");
  require(spec.spread >= 0 && spec.spread % 2 == 0, ErrorCategory::kInvalidArgument, "spread must be even");
  require(spec.universe % 2 == 0 && spec.universe >= 2 * spec.spread, ErrorCategory::kInvalidArgument,
          "universe must be even and at least twice the spread");
  Rng rng(derive_seed(spec.seed, {0x53594eULL}));
  const auto half_range = static_cast<std::uint64_t>((spec.universe - 2 * spec.spread) / 2 + 1);
  std::vector<double> centers(spec.clusters * spec.dim);
  for (auto& c : centers) c = static_cast<double>(spec.spread + 2 * static_cast<Coord>(rng.below(half_range)));

  const auto half_spread = static_cast<std::uint64_t>(spec.spread / 2);
  auto draw = [&](std::size_t count) {
    std::vector<double> values(count * spec.dim);
    for (std::size_t p = 0; p < count; ++p) {
      const auto cluster = static_cast<std::size_t>(rng.below(spec.clusters));
      for (std::size_t i = 0; i < spec.dim; ++i) {
        const auto noise = 2 * (static_cast<std::int64_t>(rng.below(2 * half_spread + 1)) -
                                static_cast<std::int64_t>(half_spread));
        values[p * spec.dim + i] = centers[cluster * spec.dim + i] + static_cast<double>(noise);
      }
    }
    return values;
  };
  SyntheticCorpus corpus;
  corpus.data = RawDataset(spec.dim, draw(spec.points));
  if (spec.queries > 0) corpus.queries = RawDataset(spec.dim, draw(spec.queries));
  return corpus;
}

ExperimentReport run_experiment(std::shared_ptr<const NormalizedDataset> data,
                                const std::vector<std::vector<Coord>>& queries,
                                const std::vector<ExperimentConfig>& configs, std::size_t k) {
  require(data != nullptr && !queries.empty(), ErrorCategory::kInvalidArgument, "experiment needs data and queries");
  ExperimentReport report;
  report.k = k;
  report.queries = queries.size();
  auto start = Clock::now();
  const auto truth = brute_force_knn_batch(*data, queries, k);
  report.oracle_ms = ms_since(start);

  for (const auto& config : configs) {
    ExperimentResult result;
    result.config = config;
    start = Clock::now();
    const auto index = build_index(data, config.index);
    result.build_ms = ms_since(start);
    result.index_bytes = index.index_bytes();
    result.walk_table_bytes = index.walk_table_bytes();

    QueryParams params = config.query;
    params.k = k;
    const auto answers = knn_query_batch(index, queries, params);
    double recall_sum = 0.0;
    double ratio_sum = 0.0;
    double candidates = 0.0;
    double buckets = 0.0;
    double elapsed_ns = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto& answer = answers[q];
      recall_sum += recall(answer.neighbors, truth[q]);
      const auto ratio = overall_ratio(answer.neighbors, truth[q]);
      ratio_sum += ratio.ratio;
      result.ratio_exclusions += ratio.excluded_zero;
      result.short_results += ratio.short_result ? 1 : 0;
      candidates += static_cast<double>(answer.stats.candidates);
      buckets += static_cast<double>(answer.stats.buckets_probed);
      elapsed_ns += static_cast<double>(answer.stats.elapsed_ns);
    }
    const auto n = static_cast<double>(queries.size());
    result.recall = recall_sum / n;
    result.overall_ratio = ratio_sum / n;
    result.mean_candidates = candidates / n;
    result.mean_buckets = buckets / n;
    result.mean_query_ms = elapsed_ns / n / 1e6;
    report.results.push_back(std::move(result));
  }
  return report;
}

nlohmann::ordered_json to_json(const IndexConfig& config) {
  return {{"kind", kind_name(config.kind)}, {"M", config.functions},     {"W", config.width},
          {"L", config.tables},             {"slot_bits", config.slot_bits}, {"seed", config.seed},
          {"T_default", config.default_probes}, {"walk_margin", config.walk_margin}};
}

nlohmann::ordered_json to_json(const SimulationReport& report) {
  const auto& spec = report.spec;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"d", c.distance}, {"T", c.probes}, {"P", c.mean}, {"std_error", c.std_error}, {"runs", c.runs}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"report", "simulation"},
          {"spec",
           {{"kind", kind_name(spec.kind)},
            {"M", spec.functions},
            {"W", spec.width},
            {"d", spec.distances},
            {"T", spec.probes},
            {"runs", spec.runs},
            {"seed", spec.seed},
            {"mode", mode_name(spec.mode)},
            {"max_std_error", spec.max_std_error}}},
          {"runs", report.runs},
          {"cells", cells}};
}

nlohmann::ordered_json to_json(const QualityParams& q) {
  return {{"schema_version", kReportSchemaVersion},
          {"report", "quality"},
          {"kind", kind_name(q.kind)},
          {"W", q.width},
          {"r1", q.r1},
          {"r2", q.r2},
          {"p1", q.p1},
          {"p2", q.p2},
          {"rho", q.rho},
          {"method", q.method}};
}

nlohmann::ordered_json to_json(const ExperimentReport& report) {
  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json query = {{"mode", mode_name(r.config.query.mode)}, {"T", r.config.query.probes}};
    if (r.config.query.max_candidates) query["max_candidates"] = *r.config.query.max_candidates;
    if (r.config.query.model_distance) query["model_distance"] = *r.config.query.model_distance;
    results.push_back({{"name", r.config.name},
                       {"index", to_json(r.config.index)},
                       {"query", query},
                       {"recall", r.recall},
                       {"overall_ratio", r.overall_ratio},
                       {"ratio_zero_exclusions", r.ratio_exclusions},
                       {"short_results", r.short_results},
                       {"mean_candidates", r.mean_candidates},
                       {"mean_buckets_probed", r.mean_buckets},
                       {"tables", r.config.index.tables},
                       {"index_bytes", r.index_bytes},
                       {"index_bytes_with_walks", r.index_bytes + r.walk_table_bytes},
                       {"walk_table_bytes", r.walk_table_bytes},
                       {"timing", {{"mean_query_ms", r.mean_query_ms}, {"build_ms", r.build_ms}}}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"report", "experiment"},
          {"k", report.k},
          {"queries", report.queries},
          {"results", results},
          {"timing", {{"oracle_ms", report.oracle_ms}}}};
}

nlohmann::ordered_json strip_timing(nlohmann::ordered_json report) { return strip_impl(std::move(report)); }

}  // namespace rwlsh
