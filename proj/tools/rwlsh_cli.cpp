// SPDX-License-Identifier: Apache-2.0

// rwlsh: command-line front end for the index, the evaluation loop and the
// success-probability simulator. Reports are JSON on stdout (or --output);
// failures print {"error": {...}} on stderr and exit with a category code.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rwlsh/core.hpp"
#include "rwlsh/dataset_io.hpp"
#include "rwlsh/error.hpp"
#include "rwlsh/harness.hpp"
#include "rwlsh/index.hpp"
#include "rwlsh/multiprobe.hpp"
#include "rwlsh/query.hpp"

namespace {

using nlohmann::ordered_json;
using namespace rwlsh;

void emit(const ordered_json& report, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream file(output, std::ios::trunc);
  require(file.good(), ErrorCategory::kIo, "cannot open '" + output + "' for writing");
  file << report.dump(2) << '\n';
  require(file.good(), ErrorCategory::kIo, "write to '" + output + "' failed");
}

int report_error(std::string_view category, const std::string& message, int code) {
  ordered_json envelope = {{"error", {{"category", category}, {"message", message}, {"exit_code", code}}}};
  std::cerr << envelope.dump() << '\n';
  return code;
}

RawDataset load(const std::string& path, const std::string& format) {
  return ingest(path, format.empty() ? format_from_path(path) : parse_format(format));
}

NormalizeOptions normalize_options(std::int64_t cap, const std::optional<double>& scale) {
  NormalizeOptions options;
  options.scale_cap = cap;
  options.scale = scale;
  return options;
}

std::vector<std::vector<Coord>> normalize_queries(const NormalizationParams& params, const RawDataset& raw) {
  std::vector<std::vector<Coord>> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back(normalize_point(params, raw.point(i)));
  return out;
}

struct IndexFlags {
  std::string kind = "random_walk";
  std::size_t functions = 10;
  double width = 8.0;
  std::size_t tables = 8;
  unsigned slot_bits = 21;
  std::size_t probes = 100;
  Coord walk_margin = 0;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--kind", kind, "random_walk | cauchy | gaussian")->capture_default_str();
    cmd->add_option("-M,--functions", functions, "hash functions per table")->capture_default_str();
    cmd->add_option("-W,--width", width, "bucket width in normalized units")->capture_default_str();
    cmd->add_option("-L,--tables", tables, "number of hash tables")->capture_default_str();
    cmd->add_option("--slot-bits", slot_bits, "log2 of the slots per table")->capture_default_str();
    cmd->add_option("--probes", probes, "template length stored in the index")->capture_default_str();
    cmd->add_option("--walk-margin", walk_margin, "even headroom added to each walk universe")->capture_default_str();
    cmd->add_option("--seed", seed, "64-bit seed")->required();
  }

  IndexConfig config() const {
    IndexConfig c;
    c.kind = parse_kind(kind);
    c.functions = functions;
    c.width = width;
    c.tables = tables;
    c.slot_bits = slot_bits;
    c.default_probes = probes;
    c.walk_margin = walk_margin;
    c.seed = seed;
    return c;
  }
};

struct QueryFlags {
  std::size_t k = 50;
  std::size_t probes = 100;
  std::string mode = "template";
  std::optional<std::size_t> max_candidates;
  std::optional<double> model_distance;

  void add(CLI::App* cmd) {
    cmd->add_option("-k", k, "neighbors per query")->capture_default_str();
    cmd->add_option("-T,--query-probes", probes, "extra buckets probed per table")->capture_default_str();
    cmd->add_option("--mode", mode, "single | optimal | subset_sum | template")->capture_default_str();
    cmd->add_option("--max-candidates", max_candidates, "stop collecting candidates at this count");
    cmd->add_option("--model-distance", model_distance, "distance the optimal mode ranks buckets for");
  }

  QueryParams params() const {
    QueryParams p;
    p.k = k;
    p.probes = probes;
    p.mode = parse_mode(mode);
    p.max_candidates = max_candidates;
    p.model_distance = model_distance;
    return p;
  }
};

ExperimentConfig config_from_json(const ordered_json& node, std::size_t position, std::uint64_t base_seed) {
  require(node.is_object(), ErrorCategory::kFormat, "grid entries must be objects");
  ExperimentConfig c;
  c.name = node.value("name", "config" + std::to_string(position));
  c.index.kind = parse_kind(node.value("kind", std::string("random_walk")));
  c.index.functions = node.value("M", c.index.functions);
  c.index.width = node.value("W", c.index.width);
  c.index.tables = node.value("L", c.index.tables);
  c.index.slot_bits = node.value("slot_bits", c.index.slot_bits);
  c.index.default_probes = node.value("T_default", std::max<std::size_t>(node.value("T", c.index.default_probes), 1));
  c.index.walk_margin = node.value("walk_margin", c.index.walk_margin);
  c.index.seed = node.value("seed", base_seed);
  c.query.probes = node.value("T", c.query.probes);
  c.query.mode = parse_mode(node.value("mode", std::string("template")));
  if (node.contains("max_candidates")) c.query.max_candidates = node["max_candidates"].get<std::size_t>();
  if (node.contains("model_distance")) c.query.model_distance = node["model_distance"].get<double>();
  return c;
}

ordered_json probes_json(const ProbingSequence& sequence) {
  ordered_json probes = ordered_json::array();
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    probes.push_back({{"delta", sequence.probes[i]}, {"score", sequence.scores[i]}});
  }
  return probes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-probe random-walk LSH for L1 nearest-neighbor search"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output;
  app.add_option("-o,--output", output, "write the JSON report here instead of stdout");

  // normalize
  auto* normalize_cmd = app.add_subcommand("normalize", "map a dataset to nonnegative even integers");
  std::string input;
  std::string format;
  std::string coords_out;
  std::int64_t scale_cap = NormalizeOptions::kDefaultScaleCap;
  std::optional<double> scale;
  normalize_cmd->add_option("-i,--input", input, "dataset path")->required();
  normalize_cmd->add_option("--format", format, "fvecs | bvecs | csv (default: from extension)");
  normalize_cmd->add_option("--coords-out", coords_out, "write normalized points as csv");
  normalize_cmd->add_option("--scale-cap", scale_cap, "largest normalized coordinate")->capture_default_str();
  normalize_cmd->add_option("--scale", scale, "fixed scale factor");

  // build
  auto* build_cmd = app.add_subcommand("build", "normalize a dataset and write an index file");
  IndexFlags index_flags;
  std::string index_path;
  build_cmd->add_option("-i,--input", input, "dataset path")->required();
  build_cmd->add_option("--format", format, "fvecs | bvecs | csv");
  build_cmd->add_option("--index", index_path, "index file to write")->required();
  build_cmd->add_option("--scale-cap", scale_cap, "largest normalized coordinate")->capture_default_str();
  build_cmd->add_option("--scale", scale, "fixed scale factor");
  index_flags.add(build_cmd);

  // query
  auto* query_cmd = app.add_subcommand("query", "answer k-NN queries from an index file");
  QueryFlags query_flags;
  std::string queries_path;
  query_cmd->add_option("--index", index_path, "index file")->required();
  query_cmd->add_option("-q,--queries", queries_path, "query points (raw coordinates)")->required();
  query_cmd->add_option("--format", format, "fvecs | bvecs | csv");
  query_flags.add(query_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "recall and overall ratio against the exact oracle");
  std::string grid_path;
  eval_cmd->add_option("-i,--input", input, "dataset path")->required();
  eval_cmd->add_option("-q,--queries", queries_path, "query points")->required();
  eval_cmd->add_option("--format", format, "fvecs | bvecs | csv");
  eval_cmd->add_option("--grid", grid_path, "JSON array of configs; flags define a single config otherwise");
  eval_cmd->add_option("--scale-cap", scale_cap, "largest normalized coordinate")->capture_default_str();
  eval_cmd->add_option("--scale", scale, "fixed scale factor");
  IndexFlags eval_index;
  QueryFlags eval_query;
  eval_index.add(eval_cmd);
  eval_query.add(eval_cmd);

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "success probability P_T(d) over random query geometry");
  SimulationSpec sim;
  std::string sim_kind = "random_walk";
  std::string sim_mode = "optimal";
  simulate_cmd->add_option("--kind", sim_kind, "random_walk | cauchy | gaussian")->capture_default_str();
  simulate_cmd->add_option("-M,--functions", sim.functions)->capture_default_str();
  simulate_cmd->add_option("-W,--width", sim.width)->capture_default_str();
  simulate_cmd->add_option("-d,--distance", sim.distances, "distances")->required();
  simulate_cmd->add_option("-T,--probes", sim.probes, "T values")->required();
  simulate_cmd->add_option("--runs", sim.runs)->capture_default_str();
  simulate_cmd->add_option("--mode", sim_mode, "optimal | subset_sum | template")->capture_default_str();
  simulate_cmd->add_option("--max-se", sim.max_std_error, "raise runs until random-walk SE is below this")
      ->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed)->required();

  // template
  auto* template_cmd = app.add_subcommand("template", "print a probing template, optionally instantiated");
  std::size_t tmpl_m = 10;
  double tmpl_w = 8.0;
  std::size_t tmpl_t = 100;
  std::vector<double> lower_faces;
  template_cmd->add_option("-M,--functions", tmpl_m)->capture_default_str();
  template_cmd->add_option("-W,--width", tmpl_w)->capture_default_str();
  template_cmd->add_option("-T,--probes", tmpl_t)->capture_default_str();
  template_cmd->add_option("--lower", lower_faces, "x_i(-1) per function; instantiates the template");

  // quality
  auto* quality_cmd = app.add_subcommand("quality", "collision probabilities and rho");
  std::string q_kind = "random_walk";
  double q_w = 8.0;
  double r1 = 6.0;
  double r2 = 12.0;
  quality_cmd->add_option("--kind", q_kind)->capture_default_str();
  quality_cmd->add_option("-W,--width", q_w)->capture_default_str();
  quality_cmd->add_option("--r1", r1)->capture_default_str();
  quality_cmd->add_option("--r2", r2)->capture_default_str();

  // tables
  auto* tables_cmd = app.add_subcommand("tables", "tables needed for a target success probability");
  double per_table = 0.0;
  double target = 0.99;
  tables_cmd->add_option("-P,--per-table", per_table)->required();
  tables_cmd->add_option("--target", target)->capture_default_str();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a seeded clustered corpus");
  SyntheticSpec synth;
  std::string data_out;
  std::string queries_out;
  synth_cmd->add_option("--points", synth.points)->capture_default_str();
  synth_cmd->add_option("--queries", synth.queries)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim)->capture_default_str();
  synth_cmd->add_option("--clusters", synth.clusters)->capture_default_str();
  synth_cmd->add_option("--spread", synth.spread)->capture_default_str();
  synth_cmd->add_option("--universe", synth.universe)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->required();
  synth_cmd->add_option("--data-out", data_out)->required();
  synth_cmd->add_option("--queries-out", queries_out)->required();
  synth_cmd->add_option("--format", format, "fvecs | csv")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error(category_name(ErrorCategory::kInvalidArgument), e.what(),
                        exit_code(ErrorCategory::kInvalidArgument));
  }

  try {
    if (*normalize_cmd) {
      const auto raw = load(input, format);
      const auto data = normalize(raw, normalize_options(scale_cap, scale));
      if (!coords_out.empty()) {
        std::vector<double> values(data.coords().begin(), data.coords().end());
        write_csv(RawDataset(data.dim(), std::move(values)), coords_out);
      }
      emit({{"schema_version", kReportSchemaVersion},
            {"report", "normalize"},
            {"n", data.size()},
            {"dim", data.dim()},
            {"scale", data.params().scale},
            {"shift", data.params().shift},
            {"universe", data.universe()}},
           output);
    } else if (*build_cmd) {
      const auto raw = load(input, format);
      auto data = std::make_shared<const NormalizedDataset>(normalize(raw, normalize_options(scale_cap, scale)));
      const auto index = build_index(data, index_flags.config());
      save_index(index, index_path);
      emit({{"schema_version", kReportSchemaVersion},
            {"report", "build"},
            {"index", to_json(index.config())},
            {"n", data->size()},
            {"dim", data->dim()},
            {"universe", data->universe()},
            {"occupied_slots", index.stats().occupied_slots},
            {"longest_chain", index.stats().longest_chain},
            {"index_bytes", index.index_bytes()},
            {"walk_table_bytes", index.walk_table_bytes()}},
           output);
    } else if (*query_cmd) {
      const auto index = load_index(index_path);
      const auto raw = load(queries_path, format);
      const auto queries = normalize_queries(index.data().params(), raw);
      const auto answers = knn_query_batch(index, queries, query_flags.params());
      ordered_json results = ordered_json::array();
      for (std::size_t q = 0; q < answers.size(); ++q) {
        ordered_json neighbors = ordered_json::array();
        for (const auto& n : answers[q].neighbors) neighbors.push_back({n.id, n.distance});
        const auto& s = answers[q].stats;
        results.push_back({{"query", q},
                           {"neighbors", neighbors},
                           {"stats",
                            {{"buckets_probed", s.buckets_probed},
                             {"bucket_entries", s.bucket_entries},
                             {"candidates", s.candidates},
                             {"dedup_hits", s.dedup_hits},
                             {"truncated", s.truncated}}},
                           {"timing", {{"elapsed_ns", s.elapsed_ns}}}});
      }
      emit({{"schema_version", kReportSchemaVersion},
            {"report", "query"},
            {"mode", query_flags.mode},
            {"k", query_flags.k},
            {"results", results}},
           output);
    } else if (*eval_cmd) {
      const auto raw = load(input, format);
      auto data = std::make_shared<const NormalizedDataset>(normalize(raw, normalize_options(scale_cap, scale)));
      const auto queries = normalize_queries(data->params(), load(queries_path, format));
      std::vector<ExperimentConfig> configs;
      if (!grid_path.empty()) {
        std::ifstream file(grid_path);
        require(file.good(), ErrorCategory::kIo, "cannot open '" + grid_path + "'");
        ordered_json grid;
        try {
          grid = ordered_json::parse(file);
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorCategory::kFormat, std::string("grid file: ") + e.what());
        }
        require(grid.is_array() && !grid.empty(), ErrorCategory::kFormat, "grid file must hold a nonempty array");
        for (std::size_t i = 0; i < grid.size(); ++i) {
          configs.push_back(config_from_json(grid[i], i, eval_index.seed));
        }
      } else {
        configs.push_back({"config0", eval_index.config(), eval_query.params()});
      }
      emit(to_json(run_experiment(data, queries, configs, eval_query.k)), output);
    } else if (*simulate_cmd) {
      sim.kind = parse_kind(sim_kind);
      sim.mode = parse_mode(sim_mode);
      emit(to_json(simulate_success_prob(sim)), output);
    } else if (*template_cmd) {
      const auto tmpl = build_template(tmpl_m, tmpl_w, tmpl_t);
      ordered_json subsets = ordered_json::array();
      for (std::size_t i = 0; i < tmpl.length(); ++i) {
        ordered_json ranks = ordered_json::array();
        for (auto r : tmpl.subsets[i]) ranks.push_back(r + 1);
        subsets.push_back({{"ranks", ranks}, {"expected_score", tmpl.expected_scores[i]}});
      }
      ordered_json report = {{"schema_version", kReportSchemaVersion},
                             {"report", "template"},
                             {"M", tmpl_m},
                             {"W", tmpl_w},
                             {"T", tmpl_t},
                             {"subsets", subsets}};
      if (!lower_faces.empty()) {
        require(lower_faces.size() == tmpl_m, ErrorCategory::kDimensionMismatch, "--lower needs one value per function");
        report["probes"] = probes_json(instantiate(tmpl, EpicenterGeometry(tmpl_w, lower_faces)));
      }
      emit(report, output);
    } else if (*quality_cmd) {
      emit(to_json(quality(parse_kind(q_kind), q_w, r1, r2)), output);
    } else if (*tables_cmd) {
      emit({{"schema_version", kReportSchemaVersion},
            {"report", "tables"},
            {"P", per_table},
            {"target", target},
            {"tables", tables_needed(per_table, target)}},
           output);
    } else if (*synth_cmd) {
      const auto corpus = make_synthetic_corpus(synth);
      const auto fmt = format.empty() ? DatasetFormat::kFvecs : parse_format(format);
      require(fmt != DatasetFormat::kBvecs, ErrorCategory::kInvalidArgument, "synth writes fvecs or csv");
      const auto write = fmt == DatasetFormat::kCsv ? write_csv : write_fvecs;
      write(corpus.data, data_out);
      write(corpus.queries, queries_out);
      emit({{"schema_version", kReportSchemaVersion},
            {"report", "synth"},
            {"points", synth.points},
            {"queries", synth.queries},
            {"dim", synth.dim},
            {"seed", synth.seed}},
           output);
    }
  } catch (const Error& e) {
    return report_error(category_name(e.category()), e.what(), exit_code(e.category()));
  } catch (const std::bad_alloc&) {
    return report_error(category_name(ErrorCategory::kResourceExhausted), "out of memory",
                        exit_code(ErrorCategory::kResourceExhausted));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
