#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dsclust/classifier.hpp"
#include "dsclust/evidence.hpp"
#include "dsclust/potts.hpp"

namespace dsclust::io {

// Insertion-ordered JSON keeps serialized output deterministic.
using json = nlohmann::ordered_json;

inline constexpr std::string_view kTableSchema = "dsclust-table/1";
inline constexpr std::string_view kStateSchema = "dsclust-state/1";

json frame_to_json(const Frame& frame);
Frame frame_from_json(const json& j);

// {"frame": [...], "focal": [{"set": [...], "mass": n}, ...]} with focal
// elements in canonical order. Parsing preserves mass values bit-for-bit
// (no renormalization), so serialization round-trips exactly.
json mass_to_json(const MassFunction& m);
MassFunction mass_from_json(const json& j);

// Report adds "id", "timestamp", "source".
json report_to_json(const Report& r);
Report report_from_json(const json& j);

// {"assignment": {id: cluster}, "cluster_count", "cluster_conflicts",
// "metaconflict"}; the assignment maps report ids so it can be joined with a
// report stream regardless of order.
json partition_to_json(const potts::Partition& p, std::span<const Report> reports);
potts::Partition partition_from_json(const json& j, std::span<const Report> reports);

json table_to_json(const classifier::PrototypeTable& table);
classifier::PrototypeTable table_from_json(const json& j);

// One report JSON object per line; blank lines are skipped; parse failures
// carry the 1-based line number.
std::vector<Report> read_reports_ndjson(std::istream& in);
void write_reports_ndjson(std::ostream& out, std::span<const Report> reports);

// Flat key = value files; '#' lines are comments.
std::map<std::string, std::string> parse_flat_config(std::istream& in);

// Rounds to `digits` significant decimal digits (string round-trip), used to
// keep CLI numeric output stable at 9 significant digits.
double round_sig(double v, int digits = 9);
json round_sig_deep(json v, int digits = 9);

std::string read_file(const std::string& path);
// Writes via a temp file + rename so readers never observe partial content.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace dsclust::io
