#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsclust/classifier.hpp"
#include "dsclust/evidence.hpp"
#include "dsclust/potts.hpp"
#include "dsclust/triage.hpp"

namespace dsclust::pipeline {

struct PipelineConfig {
  triage::FilterConfig filter;
  triage::RankingConfig ranking;
  potts::AnnealParams anneal;       // cluster_count is overridden per epoch
  double conflict_threshold = 0.5;  // adaptation bound and rejection threshold
  int proto_count = 3;
  int initial_q = 4;
  std::size_t epoch_every = 64;     // ingests between automatic epochs; 0 = manual
};

void validate(const PipelineConfig& cfg);

// Builds a config from flat key=value pairs; unknown keys are rejected.
PipelineConfig config_from_map(const std::map<std::string, std::string>& values);

// Per-cluster running fusion of everything routed into that cluster.
// survival carries the product of per-step (1 - k) so incremental folding
// reproduces a from-scratch combination bit for bit.
struct FusionSlot {
  std::vector<std::string> member_ids;
  std::optional<MassFunction> fused;
  double conflict = 0.0;
  double survival = 1.0;
  bool clamped = false;
};

struct EpochOutcome {
  std::size_t epoch = 0;
  std::optional<int> adopted;          // 1 or 2; absent when the epoch aborted
  int q_before = 0;
  int q_next = 0;
  double max_conflict_1 = 0.0;
  std::optional<double> max_conflict_2;
  double metaconflict = 0.0;           // of the adopted partition
  std::size_t reclassified = 0;        // reports whose routing changed
  bool converged = true;               // false when the q-clustering gave up
};

struct IngestOutcome {
  bool deferred = false;               // stored before any table exists
  std::optional<classifier::ClassificationResult> classification;
  bool epoch_due = false;
};

// Everything that survives a snapshot/restore round trip.
struct PipelineState {
  std::vector<Report> db1;                       // summarized, append-only
  std::vector<std::size_t> db2;                  // indices into db1
  int q = 0;                                     // 0 = take the config's initial_q
  std::size_t epoch = 0;
  std::size_t since_epoch = 0;
  std::shared_ptr<const classifier::PrototypeTable> table;
  std::optional<potts::Partition> last_clustering;  // over the db2 selection
  std::vector<FusionSlot> fusion;
  std::map<std::string, std::optional<std::size_t>> routing;  // id -> cluster/rejected
};

using Backend =
    std::function<potts::AnnealResult(std::span<const Report>, const potts::AnnealParams&)>;

// Orchestrator: filter -> store -> rank -> dual clustering -> adapt ->
// prototype table -> classify/fuse. A single mutex guards state;
// clustering runs outside the lock so ingestion stays responsive during an
// epoch.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, Backend backend = {});
  Pipeline(PipelineConfig cfg, PipelineState state, Backend backend = {});

  // Summarizes, stores, and classifies one report. Never runs clustering;
  // epoch_due tells the driver when run_epoch should be invoked.
  IngestOutcome ingest(const Report& raw);

  // Rank-selects db2, runs the q and q-1 clusterings, adopts one, rebuilds
  // the prototype table and fusion stubs, and reroutes every stored report.
  EpochOutcome run_epoch();

  bool epoch_due() const;
  std::size_t db1_size() const;
  std::size_t db2_size() const;
  int q() const;
  std::size_t epoch() const;
  std::shared_ptr<const classifier::PrototypeTable> table() const;
  std::vector<FusionSlot> fusion() const;
  std::map<std::string, std::optional<std::size_t>> routing() const;
  const PipelineConfig& config() const { return cfg_; }
  PipelineState state() const;

  void save_snapshot(const std::string& path) const;
  static std::unique_ptr<Pipeline> load_snapshot(const std::string& path,
                                                 Backend backend = {});

 private:
  EpochOutcome commit_epoch(std::vector<Report> db2_snapshot,
                            std::vector<std::size_t> db2_indices,
                            potts::AnnealResult first,
                            std::optional<potts::AnnealResult> second, int q_before);

  PipelineConfig cfg_;
  Backend backend_;
  mutable std::mutex mu_;
  PipelineState st_;
  std::unordered_map<std::string, std::size_t> index_of_;  // id -> db1 index
};

// Pure adaptation rule: prefer the coarser clustering when its worst subset
// conflict is below threshold, otherwise keep q (and grow it when even the
// current clustering is too conflicted).
std::pair<int, int> adapt_cluster_count(double max_c1, std::optional<double> max_c2,
                                        double threshold, int q);

// combine_all with the running conflict exposed.
std::pair<MassFunction, double> fuse_subset(std::span<const Report> reports);

}  // namespace dsclust::pipeline
