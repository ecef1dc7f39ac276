#pragma once

// Shared fixtures for the unit and acceptance suites: tiny frames, simple
// reports, and seeded random mass functions whose combinations never hit
// total conflict (every draw keeps some mass on the full frame).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dsclust/evidence.hpp"
#include "dsclust/rng.hpp"

namespace testing {

inline dsclust::Frame abc_frame() {
  return dsclust::Frame({"a", "b", "c"});
}

inline dsclust::Frame abcd_frame() {
  return dsclust::Frame({"a", "b", "c", "d"});
}

// Frame with labels "1".."n", matching the generated benchmark instances.
inline dsclust::Frame numeric_frame(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) labels.push_back(std::to_string(i));
  return dsclust::Frame(std::move(labels));
}

// Simple-support report focused on the subset encoded by `bits`.
inline dsclust::Report support_report(std::string id, const dsclust::Frame& frame,
                                      std::uint64_t bits, double s,
                                      double timestamp = 0.0) {
  dsclust::SimpleSupport ss(frame.from_bits(bits), s);
  return dsclust::Report{std::move(id), timestamp, ss.to_mass(), "test"};
}

inline dsclust::Report mass_report(std::string id, dsclust::MassFunction mass,
                                   double timestamp = 0.0) {
  return dsclust::Report{std::move(id), timestamp, std::move(mass), "test"};
}

// Random mass function with up to `max_focal` proper focal elements plus the
// full frame. The full frame always keeps mass >= theta_floor (after
// normalization slightly less, but strictly positive), so any two draws have
// pairwise conflict < 1 and Dempster combination is always defined.
inline dsclust::MassFunction random_mass(const dsclust::Frame& frame, dsclust::Rng& rng,
                                         std::size_t max_focal = 4,
                                         double theta_floor = 0.05) {
  const std::uint64_t full = frame.full_bits();
  std::vector<dsclust::MassFunction::Focal> focal;
  std::size_t want = 1 + rng.below(max_focal);
  for (std::size_t k = 0; k < want; ++k) {
    std::uint64_t bits = 1 + rng.below(full);  // [1, full]
    if (bits == full) continue;                // the full frame is added below
    bool duplicate = false;
    for (const auto& f : focal) duplicate = duplicate || f.bits == bits;
    if (duplicate) continue;
    focal.push_back({bits, rng.uniform(0.05, 1.0)});
  }
  double sum = theta_floor;
  for (const auto& f : focal) sum += f.mass;
  for (auto& f : focal) f.mass /= sum;
  focal.push_back({full, theta_floor / sum});
  return dsclust::MassFunction::from_canonical(frame, std::move(focal));
}

// Exact focal-by-focal equality (bits and bit patterns of the masses).
inline bool same_mass_bits(const dsclust::MassFunction& a, const dsclust::MassFunction& b) {
  if (a.focal_count() != b.focal_count()) return false;
  for (std::size_t i = 0; i < a.focal_count(); ++i) {
    if (a.focal()[i].bits != b.focal()[i].bits) return false;
    if (a.focal()[i].mass != b.focal()[i].mass) return false;
  }
  return true;
}

}  // namespace testing
