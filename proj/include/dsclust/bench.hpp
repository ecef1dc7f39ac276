#pragma once

#include <cstdint>
#include <vector>

#include "dsclust/evidence.hpp"
#include "dsclust/potts.hpp"

namespace dsclust::bench {

struct ScalingRow {
  int k = 0;
  std::size_t n = 0;  // 2^k - 1
  potts::PerformanceReport metrics;
};

// Runtime growth between consecutive frame sizes, next to the n^2 ln^2 n
// model the clustering is expected to follow.
struct ScalingRatio {
  int k_from = 0;
  int k_to = 0;
  double measured = 0.0;
  double predicted = 0.0;
};

struct BenchConfig {
  int k_min = 2;
  int k_max = 6;
  int runs = 5;
  std::uint64_t seed = 1;
  potts::SupportSpec support;  // per-k seeds are derived from `seed`
  potts::AnnealParams params;  // cluster_count is set per k
};

struct BenchResult {
  std::vector<ScalingRow> rows;
  std::vector<ScalingRatio> ratios;
};

BenchResult run_bench(const BenchConfig& cfg);

struct OracleCompareConfig {
  std::size_t reports = 8;
  int q = 3;
  int instances = 50;
  std::size_t frame_size = 4;  // frame scale tracks q, as in the scaling benchmark
  std::uint64_t seed = 1;
  potts::AnnealParams params;
};

struct OracleRow {
  std::uint64_t instance_seed = 0;
  double anneal_metaconflict = 0.0;
  double oracle_metaconflict = 0.0;
  double gap = 0.0;
  bool match = false;  // gap <= 1e-9
};

struct OracleResult {
  std::vector<OracleRow> rows;
  std::size_t matches = 0;
  double match_rate = 0.0;
};

// Seeded random simple-support instances, annealed and brute-forced.
OracleResult oracle_compare(const OracleCompareConfig& cfg);

// One random simple-support report stream over proper subsets of a frame.
std::vector<Report> random_instance(std::size_t reports, std::size_t frame_size,
                                    std::uint64_t seed);

struct CorpusConfig {
  std::size_t frame_size = 6;
  std::size_t count = 40;
  std::size_t events = 2;
  double noise = 0.0;  // probability a report's focus ignores its event
  std::uint64_t seed = 1;
};

// Synthetic report stream around `events` disjoint label groups. Each clean
// report's focus contains its event's anchor label, so same-event reports
// never conflict while different events always do. The ground-truth event is
// recorded in the report's source tag as "event:<i>".
std::vector<Report> gen_corpus(const CorpusConfig& cfg);

}  // namespace dsclust::bench
