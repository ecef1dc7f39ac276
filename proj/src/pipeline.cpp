#include "dsclust/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <utility>

#include "dsclust/error.hpp"
#include "dsclust/io.hpp"
#include "dsclust/rng.hpp"

namespace dsclust::pipeline {

namespace {

using io::json;

// One left-fold step of a clamped Dempster combination, identical to the
// arithmetic of combine_all_clamped so rebuilt and incrementally grown slots
// agree exactly.
void fold_into(FusionSlot& slot, const Report& r) {
  slot.member_ids.push_back(r.id);
  if (!slot.fused) {
    slot.fused = r.mass;
    slot.survival = 1.0;
    slot.conflict = 0.0;
    slot.clamped = false;
    return;
  }
  if (slot.clamped) return;
  double k = pairwise_conflict(*slot.fused, r.mass);
  if (1.0 - k <= 1e-12) {
    slot.clamped = true;
    slot.conflict = kConflictClamp;
    return;
  }
  Combined step = combine_dempster(*slot.fused, r.mass);
  slot.survival *= 1.0 - step.conflict;
  slot.conflict = 1.0 - slot.survival;
  slot.fused = std::move(step.mass);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw InvalidConfig("config key \"" + key + "\" expects a number, got \"" + value + "\"");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw InvalidConfig("config key \"" + key + "\" expects an integer, got \"" + value +
                        "\"");
  }
  return v;
}

json config_to_json(const PipelineConfig& cfg) {
  json j;
  j["p0"] = cfg.filter.p0;
  j["capacity"] = cfg.ranking.capacity;
  j["aging_rate"] = cfg.ranking.aging_rate;
  j["gamma"] = cfg.anneal.gamma;
  j["alpha"] = cfg.anneal.alpha ? json(*cfg.anneal.alpha) : json(nullptr);
  j["epsilon"] = cfg.anneal.epsilon;
  j["tau"] = cfg.anneal.tau;
  j["inner_tol"] = cfg.anneal.inner_tol;
  j["saturation"] = cfg.anneal.saturation;
  j["seed"] = cfg.anneal.seed;
  j["max_outer"] = cfg.anneal.max_outer;
  j["conflict_threshold"] = cfg.conflict_threshold;
  j["proto_count"] = cfg.proto_count;
  j["initial_q"] = cfg.initial_q;
  j["epoch_every"] = cfg.epoch_every;
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  cfg.filter.p0 = j.at("p0").get<double>();
  cfg.ranking.capacity = j.at("capacity").get<std::size_t>();
  cfg.ranking.aging_rate = j.at("aging_rate").get<double>();
  cfg.anneal.gamma = j.at("gamma").get<double>();
  if (!j.at("alpha").is_null()) cfg.anneal.alpha = j.at("alpha").get<double>();
  cfg.anneal.epsilon = j.at("epsilon").get<double>();
  cfg.anneal.tau = j.at("tau").get<double>();
  cfg.anneal.inner_tol = j.at("inner_tol").get<double>();
  cfg.anneal.saturation = j.at("saturation").get<double>();
  cfg.anneal.seed = j.at("seed").get<std::uint64_t>();
  cfg.anneal.max_outer = j.at("max_outer").get<int>();
  cfg.conflict_threshold = j.at("conflict_threshold").get<double>();
  cfg.proto_count = j.at("proto_count").get<int>();
  cfg.initial_q = j.at("initial_q").get<int>();
  cfg.epoch_every = j.at("epoch_every").get<std::size_t>();
  return cfg;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  triage::validate(cfg.filter);
  triage::validate(cfg.ranking);
  potts::AnnealParams anneal = cfg.anneal;
  anneal.cluster_count = std::max(cfg.initial_q, 1);
  potts::validate(anneal);
  if (!(cfg.conflict_threshold > 0.0 && cfg.conflict_threshold < 1.0)) {
    throw InvalidConfig("conflict_threshold must be in (0,1)");
  }
  if (cfg.proto_count < 1) throw InvalidConfig("proto_count must be >= 1");
  if (cfg.initial_q < 2) throw InvalidConfig("initial_q must be >= 2");
}

PipelineConfig config_from_map(const std::map<std::string, std::string>& values) {
  PipelineConfig cfg;
  for (const auto& [key, value] : values) {
    if (key == "p0") {
      cfg.filter.p0 = parse_double(key, value);
    } else if (key == "capacity") {
      cfg.ranking.capacity = static_cast<std::size_t>(parse_integer(key, value));
    } else if (key == "aging_rate") {
      cfg.ranking.aging_rate = parse_double(key, value);
    } else if (key == "gamma") {
      cfg.anneal.gamma = parse_double(key, value);
    } else if (key == "alpha") {
      cfg.anneal.alpha = parse_double(key, value);
    } else if (key == "epsilon") {
      cfg.anneal.epsilon = parse_double(key, value);
    } else if (key == "tau") {
      cfg.anneal.tau = parse_double(key, value);
    } else if (key == "inner_tol") {
      cfg.anneal.inner_tol = parse_double(key, value);
    } else if (key == "saturation") {
      cfg.anneal.saturation = parse_double(key, value);
    } else if (key == "seed") {
      cfg.anneal.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    } else if (key == "max_outer") {
      cfg.anneal.max_outer = static_cast<int>(parse_integer(key, value));
    } else if (key == "conflict_threshold") {
      cfg.conflict_threshold = parse_double(key, value);
    } else if (key == "proto_count") {
      cfg.proto_count = static_cast<int>(parse_integer(key, value));
    } else if (key == "initial_q") {
      cfg.initial_q = static_cast<int>(parse_integer(key, value));
    } else if (key == "epoch_every") {
      cfg.epoch_every = static_cast<std::size_t>(parse_integer(key, value));
    } else {
      throw InvalidConfig("unknown config key \"" + key + "\"");
    }
  }
  validate(cfg);
  return cfg;
}

std::pair<int, int> adapt_cluster_count(double max_c1, std::optional<double> max_c2,
                                        double threshold, int q) {
  if (max_c2 && q < 2) {
    throw KOutOfRange("q must be >= 2 when the coarser clustering ran");
  }
  if (max_c2 && *max_c2 < threshold) return {2, q - 1};
  if (max_c1 > threshold) return {1, q + 1};
  return {1, q};
}

std::pair<MassFunction, double> fuse_subset(std::span<const Report> reports) {
  if (reports.empty()) throw EmptyInput("cannot fuse an empty subset");
  FusionSlot slot;
  for (const Report& r : reports) fold_into(slot, r);
  return {std::move(*slot.fused), slot.conflict};
}

Pipeline::Pipeline(PipelineConfig cfg, Backend backend)
    : Pipeline(std::move(cfg), PipelineState{}, std::move(backend)) {}

Pipeline::Pipeline(PipelineConfig cfg, PipelineState state, Backend backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), st_(std::move(state)) {
  validate(cfg_);
  if (!backend_) {
    backend_ = [](std::span<const Report> reports, const potts::AnnealParams& p) {
      return potts::anneal(reports, p);
    };
  }
  if (st_.q == 0) st_.q = cfg_.initial_q;
  for (std::size_t i = 0; i < st_.db1.size(); ++i) {
    if (!index_of_.emplace(st_.db1[i].id, i).second) {
      throw DuplicateReportId("duplicate report id \"" + st_.db1[i].id + "\" in store");
    }
  }
  for (std::size_t idx : st_.db2) {
    if (idx >= st_.db1.size()) throw PartitionMismatch("db2 index outside db1");
  }
}

IngestOutcome Pipeline::ingest(const Report& raw) {
  Report filtered{raw.id, raw.timestamp, triage::summarize(raw.mass, cfg_.filter),
                  raw.source_tag};
  std::lock_guard lock(mu_);
  if (!st_.db1.empty()) {
    require_same_frame(st_.db1.front().mass.frame(), filtered.mass.frame());
  }
  if (index_of_.contains(filtered.id)) {
    throw DuplicateReportId("duplicate report id \"" + filtered.id + "\"");
  }
  index_of_.emplace(filtered.id, st_.db1.size());
  st_.db1.push_back(filtered);
  ++st_.since_epoch;

  IngestOutcome out;
  if (!st_.table) {
    out.deferred = true;
  } else {
    classifier::ClassificationResult result = classifier::classify(filtered, *st_.table);
    st_.routing[filtered.id] = result.cluster;
    if (result.cluster) fold_into(st_.fusion[*result.cluster], filtered);
    out.classification = std::move(result);
  }
  out.epoch_due =
      cfg_.epoch_every > 0 && st_.since_epoch >= cfg_.epoch_every && st_.db1.size() >= 2;
  return out;
}

EpochOutcome Pipeline::run_epoch() {
  std::vector<Report> db2_reports;
  std::vector<std::size_t> db2_indices;
  potts::AnnealParams p1;
  potts::AnnealParams p2;
  int q_before = 0;
  bool run_second = false;
  {
    std::lock_guard lock(mu_);
    if (st_.db1.size() < 2) throw TooFewReports("an epoch needs at least 2 stored reports");
    double now = 0.0;
    for (const Report& r : st_.db1) now = std::max(now, r.timestamp);
    db2_reports = triage::rank_select(st_.db1, now, cfg_.ranking);
    if (db2_reports.size() < 2) {
      throw TooFewReports("db2 capacity admits fewer than 2 reports");
    }
    db2_indices.reserve(db2_reports.size());
    for (const Report& r : db2_reports) db2_indices.push_back(index_of_.at(r.id));
    q_before = st_.q;
    std::size_t epoch_index = st_.epoch + 1;
    p1 = cfg_.anneal;
    p1.cluster_count = q_before;
    p1.seed = mix_seed(cfg_.anneal.seed, epoch_index, 1);
    run_second = q_before >= 2;
    p2 = cfg_.anneal;
    p2.cluster_count = std::max(q_before - 1, 1);
    p2.seed = mix_seed(cfg_.anneal.seed, epoch_index, 2);
  }

  // Clustering runs without the lock so ingestion stays live during an epoch.
  potts::AnnealResult first = backend_(db2_reports, p1);
  std::optional<potts::AnnealResult> second;
  if (run_second) second = backend_(db2_reports, p2);

  return commit_epoch(std::move(db2_reports), std::move(db2_indices), std::move(first),
                      std::move(second), q_before);
}

EpochOutcome Pipeline::commit_epoch(std::vector<Report> db2_snapshot,
                                    std::vector<std::size_t> db2_indices,
                                    potts::AnnealResult first,
                                    std::optional<potts::AnnealResult> second,
                                    int q_before) {
  std::lock_guard lock(mu_);
  ++st_.epoch;
  st_.since_epoch = 0;

  EpochOutcome out;
  out.epoch = st_.epoch;
  out.q_before = q_before;
  out.q_next = q_before;
  out.max_conflict_1 = first.partition.max_cluster_conflict();
  if (second && second->converged) {
    out.max_conflict_2 = second->partition.max_cluster_conflict();
  }
  if (!first.converged) {
    // Without a trustworthy q-clustering the epoch changes nothing.
    out.converged = false;
    return out;
  }

  auto [adopted, q_next] = adapt_cluster_count(out.max_conflict_1, out.max_conflict_2,
                                               cfg_.conflict_threshold, q_before);
  out.adopted = adopted;
  out.q_next = q_next;
  const potts::Partition& partition = adopted == 2 ? second->partition : first.partition;
  out.metaconflict = partition.metaconflict;

  auto table = std::make_shared<const classifier::PrototypeTable>(classifier::extract_prototypes(
      partition, db2_snapshot, cfg_.proto_count, cfg_.conflict_threshold));

  std::unordered_map<std::string, std::size_t> clustered;
  clustered.reserve(db2_snapshot.size());
  for (std::size_t i = 0; i < db2_snapshot.size(); ++i) {
    clustered.emplace(db2_snapshot[i].id,
                      static_cast<std::size_t>(partition.assignment[i]));
  }

  // Clustered reports follow the partition; everything else (including
  // arrivals that landed while the clustering ran) goes through the
  // classifier against the fresh table.
  std::map<std::string, std::optional<std::size_t>> routing;
  std::vector<FusionSlot> fusion(table->clusters.size());
  for (const Report& r : st_.db1) {
    std::optional<std::size_t> cluster;
    if (auto it = clustered.find(r.id); it != clustered.end()) {
      cluster = it->second;
    } else {
      cluster = classifier::classify(r, *table).cluster;
    }
    routing[r.id] = cluster;
    if (cluster) fold_into(fusion[*cluster], r);
  }
  for (const auto& [id, cluster] : routing) {
    auto it = st_.routing.find(id);
    if (it == st_.routing.end() || it->second != cluster) ++out.reclassified;
  }

  st_.table = std::move(table);
  st_.routing = std::move(routing);
  st_.fusion = std::move(fusion);
  st_.db2 = std::move(db2_indices);
  st_.last_clustering = partition;
  st_.q = q_next;
  return out;
}

bool Pipeline::epoch_due() const {
  std::lock_guard lock(mu_);
  return cfg_.epoch_every > 0 && st_.since_epoch >= cfg_.epoch_every &&
         st_.db1.size() >= 2;
}

std::size_t Pipeline::db1_size() const {
  std::lock_guard lock(mu_);
  return st_.db1.size();
}

std::size_t Pipeline::db2_size() const {
  std::lock_guard lock(mu_);
  return st_.db2.size();
}

int Pipeline::q() const {
  std::lock_guard lock(mu_);
  return st_.q;
}

std::size_t Pipeline::epoch() const {
  std::lock_guard lock(mu_);
  return st_.epoch;
}

std::shared_ptr<const classifier::PrototypeTable> Pipeline::table() const {
  std::lock_guard lock(mu_);
  return st_.table;
}

std::vector<FusionSlot> Pipeline::fusion() const {
  std::lock_guard lock(mu_);
  return st_.fusion;
}

std::map<std::string, std::optional<std::size_t>> Pipeline::routing() const {
  std::lock_guard lock(mu_);
  return st_.routing;
}

PipelineState Pipeline::state() const {
  std::lock_guard lock(mu_);
  return st_;
}

void Pipeline::save_snapshot(const std::string& path) const {
  json j;
  {
    std::lock_guard lock(mu_);
    j["schema"] = io::kStateSchema;
    j["config"] = config_to_json(cfg_);
    j["q"] = st_.q;
    j["epoch"] = st_.epoch;
    j["since_epoch"] = st_.since_epoch;
    json db1 = json::array();
    for (const Report& r : st_.db1) db1.push_back(io::report_to_json(r));
    j["db1"] = std::move(db1);
    json db2 = json::array();
    for (std::size_t idx : st_.db2) db2.push_back(st_.db1[idx].id);
    j["db2"] = std::move(db2);
    j["table"] = st_.table ? io::table_to_json(*st_.table) : json(nullptr);
    if (st_.last_clustering) {
      std::vector<Report> db2_reports;
      for (std::size_t idx : st_.db2) db2_reports.push_back(st_.db1[idx]);
      j["last_clustering"] = io::partition_to_json(*st_.last_clustering, db2_reports);
    } else {
      j["last_clustering"] = nullptr;
    }
    json routing = json::object();
    for (const auto& [id, cluster] : st_.routing) {
      routing[id] = cluster ? json(*cluster) : json(nullptr);
    }
    j["routing"] = std::move(routing);
    json fusion = json::array();
    for (const FusionSlot& slot : st_.fusion) fusion.push_back(slot.member_ids);
    j["fusion"] = std::move(fusion);
  }
  io::write_file_atomic(path, j.dump() + "\n");
}

std::unique_ptr<Pipeline> Pipeline::load_snapshot(const std::string& path, Backend backend) {
  std::string text = io::read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw SchemaVersionMismatch("snapshot is not a JSON object");
  }
  if (!j.contains("schema") || !j["schema"].is_string() ||
      j["schema"].get<std::string>() != io::kStateSchema) {
    throw SchemaVersionMismatch("snapshot schema is not " + std::string(io::kStateSchema));
  }
  try {
    PipelineConfig cfg = config_from_json(j.at("config"));
    PipelineState st;
    st.q = j.at("q").get<int>();
    st.epoch = j.at("epoch").get<std::size_t>();
    st.since_epoch = j.at("since_epoch").get<std::size_t>();
    for (const json& rj : j.at("db1")) st.db1.push_back(io::report_from_json(rj));
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < st.db1.size(); ++i) index.emplace(st.db1[i].id, i);
    std::vector<Report> db2_reports;
    for (const json& idj : j.at("db2")) {
      st.db2.push_back(index.at(idj.get<std::string>()));
      db2_reports.push_back(st.db1[st.db2.back()]);
    }
    if (!j.at("table").is_null()) {
      st.table = std::make_shared<const classifier::PrototypeTable>(
          io::table_from_json(j.at("table")));
    }
    if (!j.at("last_clustering").is_null()) {
      st.last_clustering = io::partition_from_json(j.at("last_clustering"), db2_reports);
    }
    for (const auto& [id, cluster] : j.at("routing").items()) {
      st.routing[id] = cluster.is_null()
                           ? std::optional<std::size_t>{}
                           : std::optional<std::size_t>{cluster.get<std::size_t>()};
    }
    for (const json& members : j.at("fusion")) {
      FusionSlot slot;
      for (const json& idj : members) {
        fold_into(slot, st.db1.at(index.at(idj.get<std::string>())));
      }
      st.fusion.push_back(std::move(slot));
    }
    return std::make_unique<Pipeline>(std::move(cfg), std::move(st), std::move(backend));
  } catch (const SchemaVersionMismatch&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaVersionMismatch(std::string("snapshot is corrupt: ") + e.what());
  }
}

}  // namespace dsclust::pipeline
