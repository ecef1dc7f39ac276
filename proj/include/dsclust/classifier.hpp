#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsclust/evidence.hpp"
#include "dsclust/potts.hpp"

namespace dsclust::classifier {

// Per-cluster evidence that a report does NOT belong there: the relative
// conflict increase (c_with - c_without) / (1 - c_without), always in [0,1].
struct MembershipEvidence {
  std::vector<double> against;

  std::size_t argmin() const;  // ties resolve to the lowest cluster index
};

// Normalized squared plausibility of membership per cluster.
struct Credibility {
  std::vector<double> alpha;

  std::size_t argmax() const;  // ties resolve to the lowest cluster index
};

// One cluster's representative evidence, pre-combined for classification.
// A cluster that attracted no prototypes stays inactive (no combined mass)
// and never receives assignments.
struct PrototypeCluster {
  std::vector<std::string> prototype_ids;
  std::optional<MassFunction> combined;
  double baseline_conflict = 0.0;
  bool conflict_clamped = false;

  bool active() const { return combined.has_value(); }
};

struct PrototypeTable {
  Frame frame;
  double threshold = 0.5;
  int proto_count = 3;
  std::vector<PrototypeCluster> clusters;

  std::size_t active_count() const;
};

struct ClassificationResult {
  // Cluster index when assigned, empty when rejected.
  std::optional<std::size_t> cluster;
  MembershipEvidence evidence;
  std::size_t combinations_used = 0;

  bool rejected() const { return !cluster.has_value(); }
};

// Evidence against e belonging to each cluster of the partition. When e is one
// of the partitioned reports (matched by id) its own cluster is evaluated by
// removing it; other clusters are evaluated by adding it.
MembershipEvidence membership_evidence(const Report& e, const potts::Partition& partition,
                                       std::span<const Report> reports);

// alpha_j = Pls_j^2 / sum_k Pls_k with Pls_j = 1 - against_j.
Credibility credibility(const MembershipEvidence& ev);

// Rule 1: each report becomes a potential prototype of its least-against
// cluster. Rule 2: each cluster keeps its proto_count most credible potential
// prototypes (ties by id) and combines them once, recording the conflict.
PrototypeTable extract_prototypes(const potts::Partition& partition,
                                  std::span<const Report> reports, int proto_count,
                                  double threshold);

// One Dempster combination per active cluster, whatever the history size.
// Rejects when even the best cluster's against-evidence strictly exceeds the
// threshold.
ClassificationResult classify(const Report& e, const PrototypeTable& table);
ClassificationResult classify(const Report& e, const PrototypeTable& table, double threshold);

}  // namespace dsclust::classifier
