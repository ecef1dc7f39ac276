#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsclust/bench.hpp"
#include "dsclust/classifier.hpp"
#include "dsclust/error.hpp"
#include "dsclust/io.hpp"
#include "dsclust/pipeline.hpp"
#include "dsclust/potts.hpp"

namespace {

using dsclust::io::json;

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string output = "-";
  std::string format = "json";
};

std::vector<dsclust::Report> load_reports(const std::string& path) {
  if (path == "-") return dsclust::io::read_reports_ndjson(std::cin);
  std::ifstream in(path);
  if (!in) throw dsclust::IoError("cannot open " + path + " for reading");
  return dsclust::io::read_reports_ndjson(in);
}

json load_json(const std::string& path) {
  json j = json::parse(dsclust::io::read_file(path), nullptr, false);
  if (j.is_discarded()) throw dsclust::ParseError(path + ": invalid JSON");
  return j;
}

void emit(const std::string& text, const std::string& output) {
  if (output == "-" || output.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    dsclust::io::write_file_atomic(output, text);
  }
}

std::string render_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Generic key = value / table rendering so text output is always a view of
// the JSON document rather than a second computation.
void render_text(const json& v, std::ostream& out, const std::string& indent = "") {
  if (v.is_object()) {
    for (const auto& [key, value] : v.items()) {
      if (value.is_object() || value.is_array()) {
        out << indent << key << ":\n";
        render_text(value, out, indent + "  ");
      } else {
        out << indent << key << " = " << render_scalar(value) << "\n";
      }
    }
  } else if (v.is_array()) {
    bool table = !v.empty() && v.front().is_object();
    if (table) {
      for (const json& row : v) {
        std::string sep;
        out << indent;
        for (const auto& [key, value] : row.items()) {
          out << sep << key << "=" << render_scalar(value);
          sep = "  ";
        }
        out << "\n";
      }
    } else {
      out << indent << v.dump() << "\n";
    }
  } else {
    out << indent << render_scalar(v) << "\n";
  }
}

void emit_doc(const json& doc, const GlobalOpts& opts) {
  json rounded = dsclust::io::round_sig_deep(doc);
  if (opts.format == "json") {
    emit(rounded.dump(2) + "\n", opts.output);
  } else {
    std::ostringstream text;
    render_text(rounded, text);
    emit(text.str(), opts.output);
  }
}

json ratio_to_json(const dsclust::bench::ScalingRatio& r) {
  json j;
  j["k_from"] = r.k_from;
  j["k_to"] = r.k_to;
  j["measured"] = r.measured;
  j["predicted"] = r.predicted;
  return j;
}

json row_to_json(const dsclust::bench::ScalingRow& row, int runs) {
  const dsclust::potts::PerformanceReport& m = row.metrics;
  json j;
  j["k"] = row.k;
  j["n"] = row.n;
  j["runs"] = runs;
  j["converged_runs"] = m.converged_runs;
  j["mean_metaconflict"] = m.mean_metaconflict;
  j["median_metaconflict"] = m.median_metaconflict;
  j["mean_per_cluster"] = m.mean_per_cluster;
  j["median_per_cluster"] = m.median_per_cluster;
  j["mean_per_evidence"] = m.mean_per_evidence;
  j["median_per_evidence"] = m.median_per_evidence;
  j["mean_runtime_ms"] = m.mean_runtime_ms;
  j["median_runtime_ms"] = m.median_runtime_ms;
  j["total_runtime_ms"] = m.total_runtime_ms;
  j["mean_inner_sweeps"] = m.mean_inner_sweeps;
  return j;
}

int cmd_bench(const GlobalOpts& opts, int k_single, int k_min, int k_max, int runs,
              const std::string& support, bool allow_large) {
  dsclust::bench::BenchConfig cfg;
  cfg.k_min = k_single > 0 ? k_single : k_min;
  cfg.k_max = k_single > 0 ? k_single : k_max;
  cfg.runs = runs;
  cfg.seed = opts.seed;
  cfg.support = dsclust::potts::SupportSpec::parse(support, opts.seed);
  if (cfg.k_max >= 10 && !allow_large) {
    throw dsclust::InvalidConfig(
        "frame sizes of 10+ need --allow-large (runtime grows steeply with 2^k)");
  }
  if (cfg.k_max >= 10) {
    std::cerr << "warning: large frame sizes ahead; results fluctuate and runs are slow\n";
  }

  dsclust::bench::BenchResult result = dsclust::bench::run_bench(cfg);
  json doc;
  doc["rows"] = json::array();
  for (const auto& row : result.rows) doc["rows"].push_back(row_to_json(row, cfg.runs));
  doc["ratios"] = json::array();
  for (const auto& r : result.ratios) doc["ratios"].push_back(ratio_to_json(r));
  doc["reference"] = {{"k", 11},
                      {"mean_per_evidence", 0.008},
                      {"median_per_evidence", 0.024},
                      {"note", "large-frame reference target; not executed by default"}};
  emit_doc(doc, opts);
  return 0;
}

int cmd_oracle_compare(const GlobalOpts& opts, std::size_t n, int q, int instances,
                       std::size_t frame_size) {
  dsclust::bench::OracleCompareConfig cfg;
  cfg.reports = n;
  cfg.q = q;
  cfg.instances = instances;
  cfg.frame_size = frame_size;
  cfg.seed = opts.seed;
  dsclust::bench::OracleResult result = dsclust::bench::oracle_compare(cfg);

  json doc;
  doc["rows"] = json::array();
  for (const auto& row : result.rows) {
    json j;
    j["instance_seed"] = row.instance_seed;
    j["anneal_metaconflict"] = row.anneal_metaconflict;
    j["oracle_metaconflict"] = row.oracle_metaconflict;
    j["gap"] = row.gap;
    j["match"] = row.match;
    doc["rows"].push_back(std::move(j));
  }
  doc["matches"] = result.matches;
  doc["instances"] = instances;
  doc["match_rate"] = result.match_rate;
  emit_doc(doc, opts);
  return 0;
}

int cmd_gen_corpus(const GlobalOpts& opts, std::size_t frame_size, std::size_t count,
                   std::size_t events, double noise) {
  dsclust::bench::CorpusConfig cfg{frame_size, count, events, noise, opts.seed};
  std::vector<dsclust::Report> reports = dsclust::bench::gen_corpus(cfg);
  std::ostringstream out;
  dsclust::io::write_reports_ndjson(out, reports);
  emit(out.str(), opts.output);
  return 0;
}

int cmd_cluster(const GlobalOpts& opts, const std::string& input,
                const dsclust::potts::AnnealParams& params) {
  std::vector<dsclust::Report> reports = load_reports(input);
  auto start = std::chrono::steady_clock::now();
  dsclust::potts::AnnealResult result = dsclust::potts::anneal(reports, params);
  std::chrono::duration<double, std::milli> elapsed =
      std::chrono::steady_clock::now() - start;

  json doc = dsclust::io::partition_to_json(result.partition, reports);
  doc["steps"] = {{"outer", result.spins.outer_steps},
                  {"inner_sweeps", result.spins.inner_sweeps}};
  doc["runtime_ms"] = elapsed.count();
  doc["converged"] = result.converged;
  emit_doc(doc, opts);
  if (!result.converged) {
    std::cerr << "error: annealing hit the outer iteration cap without freezing\n";
    return 2;
  }
  return 0;
}

int cmd_prototypes(const GlobalOpts& opts, const std::string& partition_path,
                   const std::string& input, int proto_count, double threshold) {
  std::vector<dsclust::Report> reports = load_reports(input);
  dsclust::potts::Partition partition =
      dsclust::io::partition_from_json(load_json(partition_path), reports);
  dsclust::classifier::PrototypeTable table =
      dsclust::classifier::extract_prototypes(partition, reports, proto_count, threshold);
  emit_doc(dsclust::io::table_to_json(table), opts);
  return 0;
}

json classification_to_json(const std::string& id,
                            const dsclust::classifier::ClassificationResult& res) {
  json j;
  j["id"] = id;
  j["verdict"] = res.rejected() ? "rejected" : "assigned";
  j["cluster"] = res.cluster ? json(*res.cluster) : json(nullptr);
  j["against"] = res.evidence.against;
  j["combinations_used"] = res.combinations_used;
  return j;
}

int cmd_classify(const GlobalOpts& opts, const std::string& table_path,
                 const std::string& input, std::optional<double> threshold) {
  dsclust::classifier::PrototypeTable table =
      dsclust::io::table_from_json(load_json(table_path));
  std::vector<dsclust::Report> reports = load_reports(input);
  std::ostringstream out;
  for (const dsclust::Report& r : reports) {
    dsclust::classifier::ClassificationResult res =
        threshold ? classify(r, table, *threshold) : classify(r, table);
    json line = dsclust::io::round_sig_deep(classification_to_json(r.id, res));
    if (opts.format == "json") {
      out << line.dump() << "\n";
    } else {
      out << line["id"].get<std::string>() << "\t" << line["verdict"].get<std::string>()
          << "\t" << render_scalar(line["cluster"]) << "\n";
    }
  }
  emit(out.str(), opts.output);
  return 0;
}

json epoch_to_json(const dsclust::pipeline::EpochOutcome& e) {
  json j;
  j["epoch"] = e.epoch;
  j["adopted"] = e.adopted ? json(*e.adopted) : json(nullptr);
  j["q"] = e.q_before;
  j["q_next"] = e.q_next;
  j["max_conflicts"] = json::array(
      {e.max_conflict_1, e.max_conflict_2 ? json(*e.max_conflict_2) : json(nullptr)});
  j["metaconflict"] = e.metaconflict;
  j["reclassified"] = e.reclassified;
  j["converged"] = e.converged;
  return j;
}

struct PipelineOverrides {
  std::optional<std::size_t> epoch_every;
  std::optional<double> p0;
  std::optional<std::size_t> db2_capacity;
  std::optional<double> aging_rate;
};

int cmd_pipeline_run(const GlobalOpts& opts, const std::string& config_path,
                     const std::string& input, const PipelineOverrides& overrides,
                     const std::string& snapshot_dir, bool final_epoch) {
  dsclust::pipeline::PipelineConfig cfg;
  if (!config_path.empty()) {
    std::ifstream conf(config_path);
    if (!conf) throw dsclust::IoError("cannot open " + config_path + " for reading");
    cfg = dsclust::pipeline::config_from_map(dsclust::io::parse_flat_config(conf));
  }
  if (overrides.epoch_every) cfg.epoch_every = *overrides.epoch_every;
  if (overrides.p0) cfg.filter.p0 = *overrides.p0;
  if (overrides.db2_capacity) cfg.ranking.capacity = *overrides.db2_capacity;
  if (overrides.aging_rate) cfg.ranking.aging_rate = *overrides.aging_rate;
  dsclust::pipeline::validate(cfg);
  dsclust::pipeline::Pipeline pipe(cfg);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    file.open(input);
    if (!file) throw dsclust::IoError("cannot open " + input + " for reading");
    in = &file;
  }

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (opts.output != "-" && !opts.output.empty()) {
    out_file.open(opts.output, std::ios::trunc);
    if (!out_file) throw dsclust::IoError("cannot open " + opts.output + " for writing");
    out = &out_file;
  }

  auto emit_routing = [&](const std::string& id,
                          const dsclust::pipeline::IngestOutcome& outcome) {
    json j;
    j["id"] = id;
    if (outcome.deferred) {
      j["status"] = "deferred";
      j["cluster"] = nullptr;
    } else {
      j["status"] = outcome.classification->rejected() ? "rejected" : "assigned";
      j["cluster"] = outcome.classification->cluster
                         ? json(*outcome.classification->cluster)
                         : json(nullptr);
    }
    j = dsclust::io::round_sig_deep(j);
    if (opts.format == "json") {
      *out << j.dump() << "\n";
    } else {
      *out << id << "\t" << j["status"].get<std::string>() << "\t"
           << render_scalar(j["cluster"]) << "\n";
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw dsclust::ParseError("line " + std::to_string(line_no) + ": invalid JSON");
    }
    dsclust::Report report = dsclust::io::report_from_json(j);
    dsclust::pipeline::IngestOutcome outcome = pipe.ingest(report);
    emit_routing(report.id, outcome);
    if (outcome.epoch_due) {
      dsclust::pipeline::EpochOutcome epoch = pipe.run_epoch();
      std::cerr << dsclust::io::round_sig_deep(epoch_to_json(epoch)).dump() << "\n";
    }
  }
  if (final_epoch && pipe.db1_size() >= 2) {
    dsclust::pipeline::EpochOutcome epoch = pipe.run_epoch();
    std::cerr << dsclust::io::round_sig_deep(epoch_to_json(epoch)).dump() << "\n";
  }
  out->flush();
  if (!snapshot_dir.empty()) {
    pipe.save_snapshot(snapshot_dir + "/state.json");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evidence triage, conflict-driven clustering, and classification toolkit"};
  app.require_subcommand(1);

  GlobalOpts opts;
  auto* seed_opt =
      app.add_option("--seed", opts.seed, "seed for every random draw")->capture_default_str();
  app.add_option("--output", opts.output, "output path, - for stdout")
      ->capture_default_str();
  app.add_option("--format", opts.format, "output rendering")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "scaling study over generated instances");
  bench->fallthrough();
  int bench_k = 0, bench_k_min = 2, bench_k_max = 6, bench_runs = 5;
  std::string bench_support = "range:0.1,0.9";
  bool allow_large = false;
  bench->add_option("--k", bench_k, "single frame size (overrides the range)");
  bench->add_option("--k-min", bench_k_min, "first frame size")->capture_default_str();
  bench->add_option("--k-max", bench_k_max, "last frame size")->capture_default_str();
  bench->add_option("--runs", bench_runs, "seeded runs per frame size")
      ->capture_default_str();
  bench->add_option("--support", bench_support, "fixed:<v> or range:<lo>,<hi>")
      ->capture_default_str();
  bench->add_flag("--allow-large", allow_large, "permit frame sizes of 10 and above");

  auto* oracle = app.add_subcommand("oracle-compare",
                                    "annealing vs exhaustive search on small instances");
  oracle->fallthrough();
  std::size_t oracle_n = 8;
  int oracle_q = 3, oracle_instances = 50;
  std::size_t oracle_frame = 4;
  oracle->add_option("--n", oracle_n, "reports per instance")->capture_default_str();
  oracle->add_option("--q", oracle_q, "clusters")->capture_default_str();
  oracle->add_option("--instances", oracle_instances, "instance count")
      ->capture_default_str();
  oracle->add_option("--frame-size", oracle_frame, "labels per frame")
      ->capture_default_str();

  auto* corpus = app.add_subcommand("gen-corpus", "synthetic multi-event report stream");
  corpus->fallthrough();
  std::size_t corpus_frame = 6, corpus_count = 40, corpus_events = 2;
  double corpus_noise = 0.0;
  corpus->add_option("--frame-size", corpus_frame, "labels per frame")
      ->capture_default_str();
  corpus->add_option("--count", corpus_count, "reports to generate")->capture_default_str();
  corpus->add_option("--events", corpus_events, "disjoint ground-truth events")
      ->capture_default_str();
  corpus->add_option("--noise", corpus_noise, "chance a focus ignores its event")
      ->capture_default_str();

  auto* cluster = app.add_subcommand("cluster", "partition a report stream once");
  cluster->fallthrough();
  std::string cluster_input = "-";
  dsclust::potts::AnnealParams cluster_params;
  double cluster_alpha = -1.0;
  cluster->add_option("--input", cluster_input, "reports NDJSON, - for stdin")
      ->capture_default_str();
  cluster->add_option("--k", cluster_params.cluster_count, "cluster count")->required();
  cluster->add_option("--gamma", cluster_params.gamma)->capture_default_str();
  cluster->add_option("--alpha", cluster_alpha, "cluster-size pressure (default per k)");
  cluster->add_option("--tau", cluster_params.tau)->capture_default_str();
  cluster->add_option("--epsilon", cluster_params.epsilon)->capture_default_str();
  cluster->add_option("--max-outer", cluster_params.max_outer)->capture_default_str();

  auto* prototypes = app.add_subcommand("prototypes",
                                        "extract a prototype table from a partition");
  prototypes->fallthrough();
  std::string proto_partition, proto_input = "-";
  int proto_n = 3;
  double proto_threshold = 0.0;
  prototypes->add_option("--partition", proto_partition, "partition JSON path")->required();
  prototypes->add_option("--input", proto_input, "reports NDJSON, - for stdin")
      ->capture_default_str();
  prototypes->add_option("--n", proto_n, "prototypes kept per cluster")
      ->capture_default_str();
  prototypes->add_option("--threshold", proto_threshold, "rejection threshold in (0,1)")
      ->required();

  auto* classify = app.add_subcommand("classify", "route reports against a table");
  classify->fallthrough();
  std::string classify_table, classify_input = "-";
  double classify_threshold = -1.0;
  classify->add_option("--table", classify_table, "prototype table JSON path")->required();
  classify->add_option("--input", classify_input, "reports NDJSON, - for stdin")
      ->capture_default_str();
  classify->add_option("--threshold", classify_threshold,
                       "override the table's rejection threshold");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end orchestration");
  pipeline_cmd->require_subcommand(1);
  auto* pipeline_run = pipeline_cmd->add_subcommand("run", "stream reports through the pipeline");
  pipeline_run->fallthrough();
  std::string pipe_config, pipe_input = "-", pipe_snapshot;
  std::size_t pipe_epoch_every = 0, pipe_capacity = 0;
  double pipe_p0 = 0.0, pipe_aging = 0.0;
  bool pipe_final_epoch = false;
  auto* epoch_opt = pipeline_run->add_option("--epoch-every", pipe_epoch_every,
                                             "ingests between automatic clusterings");
  pipeline_run->add_option("--config", pipe_config, "flat key=value config file");
  pipeline_run->add_option("--input", pipe_input, "reports NDJSON, - for stdin")
      ->capture_default_str();
  pipeline_run->add_option("--snapshot", pipe_snapshot, "directory for the final state");
  pipeline_run->add_flag("--final-epoch", pipe_final_epoch,
                         "run one more clustering after the stream ends");
  auto* p0_opt = pipeline_run->add_option("--p0", pipe_p0,
                                          "summarization threshold (default 0.01)");
  auto* cap_opt = pipeline_run->add_option("--db2-capacity", pipe_capacity,
                                           "clustering store size (default 256)");
  auto* aging_opt = pipeline_run->add_option("--aging-rate", pipe_aging,
                                             "uncertainty inflation per second of age");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (std::getenv("CI") != nullptr && seed_opt->count() == 0) {
    std::cerr << "error: --seed is required when CI is set\n";
    return 1;
  }

  try {
    if (bench->parsed()) {
      return cmd_bench(opts, bench_k, bench_k_min, bench_k_max, bench_runs, bench_support,
                       allow_large);
    }
    if (oracle->parsed()) {
      return cmd_oracle_compare(opts, oracle_n, oracle_q, oracle_instances, oracle_frame);
    }
    if (corpus->parsed()) {
      return cmd_gen_corpus(opts, corpus_frame, corpus_count, corpus_events, corpus_noise);
    }
    if (cluster->parsed()) {
      cluster_params.seed = opts.seed;
      if (cluster->count("--alpha") > 0) cluster_params.alpha = cluster_alpha;
      return cmd_cluster(opts, cluster_input, cluster_params);
    }
    if (prototypes->parsed()) {
      return cmd_prototypes(opts, proto_partition, proto_input, proto_n, proto_threshold);
    }
    if (classify->parsed()) {
      std::optional<double> threshold;
      if (classify->count("--threshold") > 0) threshold = classify_threshold;
      return cmd_classify(opts, classify_table, classify_input, threshold);
    }
    if (pipeline_run->parsed()) {
      PipelineOverrides overrides;
      if (epoch_opt->count() > 0) overrides.epoch_every = pipe_epoch_every;
      if (p0_opt->count() > 0) overrides.p0 = pipe_p0;
      if (cap_opt->count() > 0) overrides.db2_capacity = pipe_capacity;
      if (aging_opt->count() > 0) overrides.aging_rate = pipe_aging;
      return cmd_pipeline_run(opts, pipe_config, pipe_input, overrides, pipe_snapshot,
                              pipe_final_epoch);
    }
  } catch (const dsclust::NoConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dsclust::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const dsclust::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
