#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsclust/error.hpp"

namespace dsclust {

inline constexpr std::size_t kMaxFrameSize = 64;
inline constexpr double kMassSumTolerance = 1e-9;
// Conflicts of exactly 1 are clamped here wherever downstream bookkeeping
// needs -log(1 - c) to stay finite.
inline constexpr double kConflictClamp = 1.0 - 1e-12;

class Subset;

// Ordered set of mutually exclusive hypothesis labels. Label order is fixed
// at construction and defines the bit encoding of subsets; at most 64 labels
// so a subset fits one machine word.
class Frame {
public:
  explicit Frame(std::vector<std::string> labels);

  std::size_t size() const { return labels_->size(); }
  const std::vector<std::string>& labels() const { return *labels_; }
  const std::string& label(std::size_t i) const { return (*labels_)[i]; }
  std::size_t index_of(std::string_view label) const;  // throws UnknownLabel

  Subset subset(std::initializer_list<std::string_view> members) const;
  Subset subset_of(std::span<const std::string> members) const;
  Subset from_bits(std::uint64_t bits) const;  // rejects bits outside the frame
  Subset full() const;
  Subset empty_set() const;
  std::uint64_t full_bits() const;

  // Structural equality: same labels in the same order.
  bool operator==(const Frame& other) const;
  bool operator!=(const Frame& other) const { return !(*this == other); }

private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

// Characteristic set of frame labels, bound to one frame. All set algebra is
// defined only between subsets of equal frames.
class Subset {
public:
  Subset(Frame frame, std::uint64_t bits) : frame_(std::move(frame)), bits_(bits) {}

  const Frame& frame() const { return frame_; }
  std::uint64_t bits() const { return bits_; }
  bool empty() const { return bits_ == 0; }
  bool is_full() const { return bits_ == frame_.full_bits(); }
  std::size_t count() const;  // |A|
  bool contains(std::size_t label_index) const { return (bits_ >> label_index) & 1u; }

  Subset intersect(const Subset& other) const;
  Subset unite(const Subset& other) const;
  bool intersects(const Subset& other) const;

  std::vector<std::string> member_labels() const;

  bool operator==(const Subset& other) const {
    return bits_ == other.bits_ && frame_ == other.frame_;
  }

private:
  Frame frame_;
  std::uint64_t bits_;
};

// Basic probability assignment: strictly positive mass on nonempty subsets,
// summing to 1 within kMassSumTolerance. Focal elements are kept sorted by
// bit pattern; that order is the canonical one for iteration, comparison and
// serialization.
class MassFunction {
public:
  struct Focal {
    std::uint64_t bits;
    double mass;
  };

  static MassFunction make(const Frame& frame,
                           std::span<const std::pair<Subset, double>> assignments);
  static MassFunction make(const Frame& frame,
                           std::initializer_list<std::pair<Subset, double>> assignments);
  // Construction from raw bit patterns. Sorts, drops exact zeros, validates
  // every invariant; does not rescale masses.
  static MassFunction from_canonical(const Frame& frame, std::vector<Focal> focal);
  static MassFunction vacuous(const Frame& frame);

  const Frame& frame() const { return frame_; }
  std::span<const Focal> focal() const { return focal_; }
  std::size_t focal_count() const { return focal_.size(); }
  double mass(const Subset& a) const;
  double mass_bits(std::uint64_t bits) const;
  double sum() const;
  bool is_vacuous() const;

  // Focal-by-focal equality of bit patterns and masses within tol.
  bool approx_equal(const MassFunction& other, double tol) const;

private:
  MassFunction(Frame frame, std::vector<Focal> focal)
      : frame_(std::move(frame)), focal_(std::move(focal)) {}

  Frame frame_;
  std::vector<Focal> focal_;
};

// Evidence focused on a single subset: m(focus) = s, m(full frame) = 1 - s.
struct SimpleSupport {
  SimpleSupport(Subset focus, double support);

  MassFunction to_mass() const;

  Subset focus;
  double support;
};

// An identified, timestamped piece of evidence.
struct Report {
  std::string id;
  double timestamp = 0.0;  // seconds since epoch, non-negative
  MassFunction mass;
  std::string source_tag;
};

struct Combined {
  MassFunction mass;
  double conflict;  // mass that fell on the empty set and was removed
};

// Combination where a totally conflicting step clamps the running conflict
// at kConflictClamp instead of failing; `mass` is the last well-defined
// combination.
struct ClampedCombined {
  MassFunction mass;
  double conflict;
  bool clamped;
};

struct ClampedConflict {
  double value = 0.0;
  bool clamped = false;
};

// Sum of products of masses on disjoint focal pairs.
double pairwise_conflict(const MassFunction& m1, const MassFunction& m2);

// Dempster's rule: intersection products, empty-set mass k removed, the rest
// rescaled by 1/(1-k). Throws TotalConflict when k = 1.
Combined combine_dempster(const MassFunction& m1, const MassFunction& m2);

// Left fold of combine_dempster over a non-empty list; the cumulative
// conflict c satisfies 1 - c = prod(1 - k_step).
Combined combine_all(std::span<const MassFunction> items);

ClampedCombined combine_all_clamped(std::span<const MassFunction> items);
ClampedCombined combine_all_clamped(std::span<const MassFunction* const> items);

// Total mass of focal elements intersecting `a`.
double plausibility(const MassFunction& m, const Subset& a);

// -log(1 - s1*s2) for disjoint foci, 0 otherwise. Natural logarithm.
double weight_of_conflict(const SimpleSupport& s1, const SimpleSupport& s2);

void require_same_frame(const Frame& a, const Frame& b);

}  // namespace dsclust
