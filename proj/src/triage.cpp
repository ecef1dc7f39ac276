#include "dsclust/triage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dsclust::triage {

void validate(const FilterConfig& cfg) {
  if (!(cfg.p0 > 0.0 && cfg.p0 < 1.0))
    throw InvalidConfig("p0 must lie in (0,1)");
}

void validate(const RankingConfig& cfg) {
  if (cfg.capacity < 1) throw InvalidConfig("capacity must be at least 1");
  if (cfg.aging_rate < 0.0) throw InvalidConfig("aging_rate must be non-negative");
}

MassFunction summarize(const MassFunction& m, const FilterConfig& cfg) {
  validate(cfg);
  const std::uint64_t full = m.frame().full_bits();
  std::vector<MassFunction::Focal> keep;
  keep.reserve(m.focal_count());
  double to_frame = 0.0;
  for (const auto& f : m.focal()) {
    if (f.bits == full || f.mass >= cfg.p0)
      keep.push_back(f);
    else
      to_frame += f.mass;
  }
  if (to_frame > 0.0) {
    if (!keep.empty() && keep.back().bits == full)
      keep.back().mass += to_frame;
    else
      keep.push_back({full, to_frame});
  }
  return MassFunction::from_canonical(m.frame(), std::move(keep));
}

double total_uncertainty(const MassFunction& m) {
  double h = 0.0;
  for (const auto& f : m.focal()) {
    h -= f.mass * std::log(f.mass);
    h += f.mass * std::log(static_cast<double>(std::popcount(f.bits)));
  }
  return h;
}

double aged_uncertainty(const Report& r, double now, const RankingConfig& cfg) {
  validate(cfg);
  const double age = now - r.timestamp;
  if (age < 0.0) throw NegativeAge("report is newer than the reference time");
  const double inflation = 1.0 + cfg.aging_rate * age;
  double h = 0.0;
  for (const auto& f : r.mass.focal()) {
    h -= f.mass * std::log(f.mass);
    h += f.mass * std::log(static_cast<double>(std::popcount(f.bits)) * inflation);
  }
  return h;
}

std::vector<Report> rank_select(std::span<const Report> reports, double now,
                                const RankingConfig& cfg) {
  validate(cfg);
  struct Scored {
    double score;
    const Report* report;
  };
  std::vector<Scored> scored;
  scored.reserve(reports.size());
  for (const auto& r : reports) scored.push_back({aged_uncertainty(r, now, cfg), &r});
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.report->timestamp != b.report->timestamp)
      return a.report->timestamp > b.report->timestamp;  // newer wins
    return a.report->id < b.report->id;
  });
  const std::size_t take = std::min(cfg.capacity, scored.size());
  std::vector<Report> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*scored[i].report);
  return out;
}

}  // namespace dsclust::triage
