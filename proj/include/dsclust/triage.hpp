#pragma once

#include <span>
#include <vector>

#include "dsclust/evidence.hpp"

namespace dsclust::triage {

// Summarization filter threshold: focal elements other than the full frame
// with mass below p0 are folded into the full frame.
struct FilterConfig {
  double p0 = 0.01;
};

// Ranking selector: at most `capacity` reports survive; `aging_rate` inflates
// the nonspecificity of old reports (0 disables aging).
struct RankingConfig {
  std::size_t capacity = 256;
  double aging_rate = 0.0;  // per second
};

void validate(const FilterConfig& cfg);
void validate(const RankingConfig& cfg);

// Drops every focal element A != full frame with m(A) < p0 and reassigns the
// removed mass to the full frame. Conserves total mass; at most
// floor(1/p0) + 1 focal elements remain.
MassFunction summarize(const MassFunction& m, const FilterConfig& cfg);

// Shannon scattering plus Hartley nonspecificity:
//   H(m) = -sum m(A) ln m(A) + sum m(A) ln|A|.
double total_uncertainty(const MassFunction& m);

// total_uncertainty with |A| inflated by (1 + aging_rate * age) in the
// nonspecificity term; age = now - report timestamp.
double aged_uncertainty(const Report& r, double now, const RankingConfig& cfg);

// The min(capacity, n) reports of smallest aged uncertainty, sorted ascending
// by score; ties broken by newer timestamp, then lexicographic id.
std::vector<Report> rank_select(std::span<const Report> reports, double now,
                                const RankingConfig& cfg);

}  // namespace dsclust::triage
