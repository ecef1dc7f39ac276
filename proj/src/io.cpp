#include "dsclust/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dsclust/error.hpp"

namespace dsclust::io {

namespace {

const json& require(const json& j, std::string_view key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError("missing key \"" + std::string(key) + "\"");
  }
  return *it;
}

std::string require_string(const json& j, std::string_view key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw ParseError("key \"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

double require_number(const json& j, std::string_view key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw ParseError("key \"" + std::string(key) + "\" must be a number");
  return v.get<double>();
}

std::vector<std::string> string_array(const json& v, std::string_view what) {
  if (!v.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const json& item : v) {
    if (!item.is_string()) throw ParseError(std::string(what) + " must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::uint64_t bits_of(const Frame& frame, const json& set) {
  std::uint64_t bits = 0;
  for (const std::string& label : string_array(set, "focal set")) {
    bits |= std::uint64_t{1} << frame.index_of(label);
  }
  return bits;
}

}  // namespace

json frame_to_json(const Frame& frame) {
  json out = json::array();
  for (const std::string& label : frame.labels()) out.push_back(label);
  return out;
}

Frame frame_from_json(const json& j) { return Frame(string_array(j, "frame")); }

json mass_to_json(const MassFunction& m) {
  json out;
  out["frame"] = frame_to_json(m.frame());
  json focal = json::array();
  for (const MassFunction::Focal& f : m.focal()) {
    json entry;
    entry["set"] = json(m.frame().from_bits(f.bits).member_labels());
    entry["mass"] = f.mass;
    focal.push_back(std::move(entry));
  }
  out["focal"] = std::move(focal);
  return out;
}

MassFunction mass_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("mass function must be a JSON object");
  Frame frame = frame_from_json(require(j, "frame"));
  const json& focal = require(j, "focal");
  if (!focal.is_array()) throw ParseError("\"focal\" must be an array");
  std::vector<MassFunction::Focal> entries;
  entries.reserve(focal.size());
  for (const json& item : focal) {
    if (!item.is_object()) throw ParseError("focal entries must be objects");
    entries.push_back({bits_of(frame, require(item, "set")), require_number(item, "mass")});
  }
  return MassFunction::from_canonical(frame, std::move(entries));
}

json report_to_json(const Report& r) {
  json out;
  out["id"] = r.id;
  out["timestamp"] = r.timestamp;
  out["source"] = r.source_tag;
  json mass = mass_to_json(r.mass);
  out["frame"] = std::move(mass["frame"]);
  out["focal"] = std::move(mass["focal"]);
  return out;
}

Report report_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("report must be a JSON object");
  Report r{require_string(j, "id"), require_number(j, "timestamp"), mass_from_json(j),
           j.contains("source") ? require_string(j, "source") : ""};
  return r;
}

json partition_to_json(const potts::Partition& p, std::span<const Report> reports) {
  if (p.assignment.size() != reports.size()) {
    throw PartitionMismatch("partition does not cover the report list");
  }
  json assignment = json::object();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    assignment[reports[i].id] = p.assignment[i];
  }
  json out;
  out["assignment"] = std::move(assignment);
  out["cluster_count"] = p.cluster_count;
  out["cluster_conflicts"] = p.cluster_conflicts;
  out["metaconflict"] = p.metaconflict;
  return out;
}

potts::Partition partition_from_json(const json& j, std::span<const Report> reports) {
  if (!j.is_object()) throw ParseError("partition must be a JSON object");
  const json& assignment = require(j, "assignment");
  if (!assignment.is_object()) throw ParseError("\"assignment\" must map ids to clusters");
  const json& count = require(j, "cluster_count");
  if (!count.is_number_integer()) throw ParseError("\"cluster_count\" must be an integer");
  std::vector<int> order(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    auto it = assignment.find(reports[i].id);
    if (it == assignment.end()) {
      throw PartitionMismatch("assignment is missing report \"" + reports[i].id + "\"");
    }
    if (!it->is_number_integer()) throw ParseError("cluster indices must be integers");
    order[i] = it->get<int>();
  }
  return potts::make_partition(reports, order, count.get<int>());
}

json table_to_json(const classifier::PrototypeTable& table) {
  json out;
  out["schema"] = kTableSchema;
  out["frame"] = frame_to_json(table.frame);
  out["threshold"] = table.threshold;
  out["proto_count"] = table.proto_count;
  json clusters = json::array();
  for (const classifier::PrototypeCluster& c : table.clusters) {
    json entry;
    entry["prototypes"] = c.prototype_ids;
    if (c.combined) {
      json focal = json::array();
      for (const MassFunction::Focal& f : c.combined->focal()) {
        json fe;
        fe["set"] = json(table.frame.from_bits(f.bits).member_labels());
        fe["mass"] = f.mass;
        focal.push_back(std::move(fe));
      }
      entry["combined"] = std::move(focal);
    } else {
      entry["combined"] = nullptr;
    }
    entry["baseline_conflict"] = c.baseline_conflict;
    entry["clamped"] = c.conflict_clamped;
    clusters.push_back(std::move(entry));
  }
  out["clusters"] = std::move(clusters);
  return out;
}

classifier::PrototypeTable table_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("table must be a JSON object");
  if (require_string(j, "schema") != kTableSchema) {
    throw SchemaVersionMismatch("expected table schema " + std::string(kTableSchema));
  }
  Frame frame = frame_from_json(require(j, "frame"));
  classifier::PrototypeTable table{frame, require_number(j, "threshold"),
                                   static_cast<int>(require_number(j, "proto_count")),
                                   {}};
  const json& clusters = require(j, "clusters");
  if (!clusters.is_array()) throw ParseError("\"clusters\" must be an array");
  for (const json& entry : clusters) {
    classifier::PrototypeCluster c;
    c.prototype_ids = string_array(require(entry, "prototypes"), "\"prototypes\"");
    const json& combined = require(entry, "combined");
    if (!combined.is_null()) {
      if (!combined.is_array()) throw ParseError("\"combined\" must be an array or null");
      std::vector<MassFunction::Focal> focal;
      for (const json& fe : combined) {
        focal.push_back({bits_of(frame, require(fe, "set")), require_number(fe, "mass")});
      }
      c.combined = MassFunction::from_canonical(frame, std::move(focal));
    }
    c.baseline_conflict = require_number(entry, "baseline_conflict");
    const json& clamped = require(entry, "clamped");
    if (!clamped.is_boolean()) throw ParseError("\"clamped\" must be a boolean");
    c.conflict_clamped = clamped.get<bool>();
    table.clusters.push_back(std::move(c));
  }
  return table;
}

std::vector<Report> read_reports_ndjson(std::istream& in) {
  std::vector<Report> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON");
    }
    try {
      reports.push_back(report_from_json(j));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return reports;
}

void write_reports_ndjson(std::ostream& out, std::span<const Report> reports) {
  for (const Report& r : reports) out << report_to_json(r).dump() << '\n';
}

std::map<std::string, std::string> parse_flat_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

double round_sig(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

json round_sig_deep(json v, int digits) {
  if (v.is_number_float()) return json(round_sig(v.get<double>(), digits));
  if (v.is_array() || v.is_object()) {
    for (auto& item : v) item = round_sig_deep(item, digits);
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path);
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code dir_ec;
    std::filesystem::create_directories(parent, dir_ec);
    if (dir_ec) {
      throw IoError("cannot create directory " + parent.string() + ": " + dir_ec.message());
    }
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " into place: " + ec.message());
}

}  // namespace dsclust::io
