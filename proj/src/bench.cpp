#include "dsclust/bench.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "dsclust/error.hpp"
#include "dsclust/rng.hpp"

namespace dsclust::bench {

namespace {

double runtime_model(std::size_t n) {
  double nd = static_cast<double>(n);
  double ln = std::log(nd);
  return nd * nd * ln * ln;
}

potts::AnnealRun timed_anneal(std::span<const Report> reports,
                              const potts::AnnealParams& params) {
  auto start = std::chrono::steady_clock::now();
  potts::AnnealResult result = potts::anneal(reports, params);
  std::chrono::duration<double, std::milli> elapsed =
      std::chrono::steady_clock::now() - start;
  return {std::move(result.partition), elapsed.count(), result.spins.outer_steps,
          result.spins.inner_sweeps, result.converged};
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  if (cfg.k_min < 1 || cfg.k_max > 16) {
    throw KOutOfRange("bench frame sizes must be in [1,16]");
  }
  if (cfg.k_max < cfg.k_min) throw InvalidConfig("bench needs k_min <= k_max");
  if (cfg.runs < 1) throw InvalidConfig("bench needs at least 1 run");

  BenchResult out;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    potts::SupportSpec support = cfg.support;
    support.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k), 0);
    std::vector<Report> reports = potts::generate_benchmark(k, support);

    std::vector<potts::AnnealRun> runs;
    runs.reserve(static_cast<std::size_t>(cfg.runs));
    for (int r = 0; r < cfg.runs; ++r) {
      potts::AnnealParams params = cfg.params;
      params.cluster_count = k;
      params.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(r) + 1);
      runs.push_back(timed_anneal(reports, params));
    }
    out.rows.push_back({k, reports.size(), potts::performance_report(runs)});
  }

  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const ScalingRow& a = out.rows[i - 1];
    const ScalingRow& b = out.rows[i];
    double measured = a.metrics.mean_runtime_ms > 0.0
                          ? b.metrics.mean_runtime_ms / a.metrics.mean_runtime_ms
                          : 0.0;
    out.ratios.push_back({a.k, b.k, measured, runtime_model(b.n) / runtime_model(a.n)});
  }
  return out;
}

std::vector<Report> random_instance(std::size_t reports, std::size_t frame_size,
                                    std::uint64_t seed) {
  if (frame_size < 2 || frame_size > kMaxFrameSize) {
    throw KOutOfRange("instance frame size must be in [2,64]");
  }
  if (reports == 0) throw EmptyInput("instance needs at least 1 report");

  std::vector<std::string> labels;
  labels.reserve(frame_size);
  for (std::size_t i = 1; i <= frame_size; ++i) labels.push_back(std::to_string(i));
  Frame frame{std::move(labels)};

  // Per report: one draw for the focus (a nonempty proper subset), one for
  // the support.
  Rng rng(seed);
  const std::uint64_t full = frame.full_bits();
  std::vector<Report> out;
  out.reserve(reports);
  for (std::size_t i = 0; i < reports; ++i) {
    std::uint64_t bits = 1 + rng.below(full - 1);  // in [1, full-1]
    double support = rng.uniform(0.1, 0.9);
    SimpleSupport ss(frame.from_bits(bits), support);
    out.push_back(Report{"r" + std::to_string(i), static_cast<double>(i), ss.to_mass(),
                         "instance"});
  }
  return out;
}

OracleResult oracle_compare(const OracleCompareConfig& cfg) {
  if (cfg.instances < 1) throw InvalidConfig("oracle comparison needs >= 1 instance");
  potts::BruteForceCaps caps;
  if (cfg.reports > caps.max_reports || cfg.q > caps.max_clusters) {
    throw InstanceTooLarge("instance exceeds the exhaustive-search cap");
  }

  OracleResult out;
  out.rows.reserve(static_cast<std::size_t>(cfg.instances));
  for (int i = 0; i < cfg.instances; ++i) {
    std::uint64_t instance_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0);
    std::vector<Report> reports =
        random_instance(cfg.reports, cfg.frame_size, instance_seed);

    potts::AnnealParams params = cfg.params;
    params.cluster_count = cfg.q;
    params.seed = mix_seed(instance_seed, 1, 0);
    potts::AnnealResult annealed = potts::anneal(reports, params);
    potts::Partition oracle = potts::brute_force_partition(reports, cfg.q);

    OracleRow row;
    row.instance_seed = instance_seed;
    row.anneal_metaconflict = annealed.partition.metaconflict;
    row.oracle_metaconflict = oracle.metaconflict;
    row.gap = row.anneal_metaconflict - row.oracle_metaconflict;
    row.match = row.gap <= 1e-9;
    if (row.match) ++out.matches;
    out.rows.push_back(row);
  }
  out.match_rate = static_cast<double>(out.matches) / static_cast<double>(cfg.instances);
  return out;
}

std::vector<Report> gen_corpus(const CorpusConfig& cfg) {
  if (cfg.events < 1) throw InvalidConfig("corpus needs at least 1 event");
  if (cfg.frame_size < cfg.events) {
    throw InvalidConfig("corpus needs events <= frame_size");
  }
  if (cfg.frame_size > kMaxFrameSize) throw FrameTooLarge("corpus frame exceeds 64 labels");
  if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) {
    throw InvalidConfig("noise must be in [0,1]");
  }

  std::vector<std::string> labels;
  labels.reserve(cfg.frame_size);
  for (std::size_t i = 1; i <= cfg.frame_size; ++i) labels.push_back(std::to_string(i));
  Frame frame{std::move(labels)};

  // Labels are split into `events` contiguous groups; the first label of a
  // group anchors its event. Per report the draws are: noise coin, focus
  // bits, support.
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) label index
  std::size_t base = cfg.frame_size / cfg.events;
  std::size_t extra = cfg.frame_size % cfg.events;
  std::size_t begin = 0;
  for (std::size_t e = 0; e < cfg.events; ++e) {
    std::size_t size = base + (e < extra ? 1 : 0);
    groups.push_back({begin, begin + size});
    begin += size;
  }

  Rng rng(cfg.seed);
  std::vector<Report> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    std::size_t event = i % cfg.events;
    auto [lo, hi] = groups[event];
    bool noisy = rng.uniform01() < cfg.noise;
    std::uint64_t bits;
    if (noisy) {
      bits = frame.full_bits() > 1 ? 1 + rng.below(frame.full_bits() - 1) : 1;
    } else {
      std::uint64_t anchor = std::uint64_t{1} << lo;
      std::uint64_t rest_width = hi - lo - 1;
      std::uint64_t rest =
          rest_width == 0 ? 0 : rng.below(std::uint64_t{1} << rest_width);
      bits = anchor | (rest << (lo + 1));
    }
    double support = rng.uniform(0.5, 0.9);
    // A focus covering the whole frame asserts nothing; degrade to vacuous
    // (only reachable when a single event owns every label).
    MassFunction mass = bits == frame.full_bits()
                            ? MassFunction::vacuous(frame)
                            : SimpleSupport(frame.from_bits(bits), support).to_mass();
    out.push_back(Report{"c" + std::to_string(i + 1), static_cast<double>(i + 1),
                         std::move(mass), "event:" + std::to_string(event)});
  }
  return out;
}

}  // namespace dsclust::bench
