// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <memory>

#include "rwlsh/harness.hpp"

namespace rwlsh {
namespace {

NormalizeOptions unit_scale() {
  NormalizeOptions opts;
  opts.scale = 1.0;
  return opts;
}

struct Fixture {
  std::shared_ptr<const NormalizedDataset> data;
  std::vector<std::vector<Coord>> queries;
  IndexConfig config;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SyntheticSpec spec;
    spec.points = 20000;
    spec.queries = 200;
    spec.seed = 1;
    const auto corpus = make_synthetic_corpus(spec);
    Fixture out;
    out.data = std::make_shared<const NormalizedDataset>(normalize(corpus.data, unit_scale()));
    for (std::size_t i = 0; i < corpus.queries.size(); ++i)
      out.queries.push_back(normalize_point(out.data->params(), corpus.queries.point(i)));
    out.config.functions = 8;
    out.config.width = 40.0;
    out.config.tables = 8;
    out.config.seed = 5;
    out.config.walk_margin = 2 * spec.spread;
    return out;
  }();
  return f;
}

void BM_BruteForce(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    for (std::size_t q = 0; q < 20; ++q) {
      benchmark::DoNotOptimize(state.range(0) ? brute_force_knn(*f.data, f.queries[q], 50)
                                              : reference::brute_force_knn(*f.data, f.queries[q], 50));
    }
  }
}
BENCHMARK(BM_BruteForce)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_WalkTable(benchmark::State& state) {
  const auto& caps = fixture().data->universe_caps();
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? build_walk_table(caps, 8, 8, 3) : reference::build_walk_table(caps, 8, 8, 3));
  }
}
BENCHMARK(BM_WalkTable)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_BuildIndex(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? build_index(f.data, f.config) : reference::build_index(f.data, f.config));
  }
}
BENCHMARK(BM_BuildIndex)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_QueryBatch(benchmark::State& state) {
  const auto& f = fixture();
  static const HashIndex index = build_index(f.data, f.config);
  QueryParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? knn_query_batch(index, f.queries, params)
                                            : reference::knn_query_batch(index, f.queries, params));
  }
}
BENCHMARK(BM_QueryBatch)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Simulation(benchmark::State& state) {
  SimulationSpec spec;
  spec.distances = {6, 8, 12, 16};
  spec.probes = {30, 60, 100};
  spec.runs = 200;
  spec.seed = 42;
  spec.max_std_error = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(state.range(0) ? simulate_success_prob(spec) : reference::simulate_success_prob(spec));
  }
}
BENCHMARK(BM_Simulation)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace rwlsh

BENCHMARK_MAIN();
