#include "dsclust/classifier.hpp"

#include <algorithm>
#include <limits>

#include "dsclust/error.hpp"

namespace dsclust::classifier {

namespace {

std::size_t min_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

std::size_t max_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double relative_increase(double with, double without) {
  return std::max(0.0, (with - without) / (1.0 - without));
}

}  // namespace

std::size_t MembershipEvidence::argmin() const { return min_index(against); }

std::size_t Credibility::argmax() const { return max_index(alpha); }

std::size_t PrototypeTable::active_count() const {
  std::size_t n = 0;
  for (const PrototypeCluster& c : clusters) {
    if (c.active()) ++n;
  }
  return n;
}

MembershipEvidence membership_evidence(const Report& e, const potts::Partition& partition,
                                       std::span<const Report> reports) {
  if (partition.assignment.size() != reports.size()) {
    throw PartitionMismatch("partition does not cover the report store");
  }
  for (const Report& r : reports) require_same_frame(e.mass.frame(), r.mass.frame());

  std::size_t own_index = reports.size();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].id == e.id) {
      own_index = i;
      break;
    }
  }

  MembershipEvidence out;
  out.against.resize(static_cast<std::size_t>(partition.cluster_count));
  for (int j = 0; j < partition.cluster_count; ++j) {
    std::vector<const Report*> members;
    bool contains_e = false;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (partition.assignment[i] != j) continue;
      if (i == own_index) {
        contains_e = true;
        continue;
      }
      members.push_back(&reports[i]);
    }
    double without =
        potts::cluster_conflict(std::span<const Report* const>(members)).value;
    members.push_back(contains_e ? &reports[own_index] : &e);
    double with = potts::cluster_conflict(std::span<const Report* const>(members)).value;
    out.against[static_cast<std::size_t>(j)] = relative_increase(with, without);
  }
  return out;
}

Credibility credibility(const MembershipEvidence& ev) {
  double denom = 0.0;
  for (double a : ev.against) denom += 1.0 - a;
  if (denom <= 0.0) throw AllImplausible("no cluster is plausible for this report");
  Credibility out;
  out.alpha.reserve(ev.against.size());
  for (double a : ev.against) {
    double pls = 1.0 - a;
    out.alpha.push_back(pls * pls / denom);
  }
  return out;
}

PrototypeTable extract_prototypes(const potts::Partition& partition,
                                  std::span<const Report> reports, int proto_count,
                                  double threshold) {
  if (reports.empty()) throw DegeneratePartition("no reports to draw prototypes from");
  if (partition.assignment.size() != reports.size()) {
    throw PartitionMismatch("partition does not cover the report store");
  }
  if (proto_count < 1) throw InvalidConfig("proto_count must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidConfig("threshold must be in (0,1)");
  }

  struct Candidate {
    std::size_t index;
    double alpha;
  };
  std::vector<std::vector<Candidate>> per_cluster(
      static_cast<std::size_t>(partition.cluster_count));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    MembershipEvidence ev = membership_evidence(reports[i], partition, reports);
    std::size_t target = ev.argmin();
    Credibility cred = credibility(ev);
    per_cluster[target].push_back({i, cred.alpha[target]});
  }

  PrototypeTable table{reports.front().mass.frame(), threshold, proto_count, {}};
  table.clusters.resize(static_cast<std::size_t>(partition.cluster_count));
  for (std::size_t j = 0; j < per_cluster.size(); ++j) {
    auto& candidates = per_cluster[j];
    std::sort(candidates.begin(), candidates.end(),
              [&](const Candidate& a, const Candidate& b) {
                if (a.alpha != b.alpha) return a.alpha > b.alpha;
                return reports[a.index].id < reports[b.index].id;
              });
    if (candidates.size() > static_cast<std::size_t>(proto_count)) {
      candidates.resize(static_cast<std::size_t>(proto_count));
    }
    if (candidates.empty()) continue;

    // Combine in store order so the recorded conflict matches the cluster
    // conflict of the same reports.
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.index < b.index; });
    std::vector<const MassFunction*> masses;
    PrototypeCluster& cluster = table.clusters[j];
    for (const Candidate& c : candidates) {
      cluster.prototype_ids.push_back(reports[c.index].id);
      masses.push_back(&reports[c.index].mass);
    }
    ClampedCombined combined =
        combine_all_clamped(std::span<const MassFunction* const>(masses));
    cluster.combined = std::move(combined.mass);
    cluster.baseline_conflict = combined.conflict;
    cluster.conflict_clamped = combined.clamped;
  }
  return table;
}

ClassificationResult classify(const Report& e, const PrototypeTable& table) {
  return classify(e, table, table.threshold);
}

ClassificationResult classify(const Report& e, const PrototypeTable& table,
                              double threshold) {
  require_same_frame(e.mass.frame(), table.frame);
  if (table.active_count() == 0) throw EmptyTable("prototype table has no active cluster");

  ClassificationResult result;
  result.evidence.against.assign(table.clusters.size(), 1.0);
  std::size_t best = table.clusters.size();
  for (std::size_t j = 0; j < table.clusters.size(); ++j) {
    const PrototypeCluster& cluster = table.clusters[j];
    if (!cluster.active()) continue;
    double step = pairwise_conflict(e.mass, *cluster.combined);
    ++result.combinations_used;
    double without = cluster.baseline_conflict;
    double with = 1.0 - (1.0 - without) * (1.0 - step);
    double against = relative_increase(with, without);
    result.evidence.against[j] = against;
    if (best == table.clusters.size() || against < result.evidence.against[best]) {
      best = j;
    }
  }
  if (result.evidence.against[best] <= threshold) result.cluster = best;
  return result;
}

}  // namespace dsclust::classifier
