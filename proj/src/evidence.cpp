#include "dsclust/evidence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

namespace dsclust {

namespace {

std::string describe_bits(const Frame& frame, std::uint64_t bits) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if ((bits >> i) & 1u) {
      if (!first) out += ",";
      out += frame.label(i);
      first = false;
    }
  }
  out += "}";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Frame

Frame::Frame(std::vector<std::string> labels) {
  if (labels.empty()) throw EmptyFrame("frame needs at least one label");
  if (labels.size() > kMaxFrameSize)
    throw FrameTooLarge("frame exceeds " + std::to_string(kMaxFrameSize) + " labels");
  std::unordered_set<std::string_view> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw DuplicateLabel("duplicate frame label: " + l);
  }
  labels_ = std::make_shared<const std::vector<std::string>>(std::move(labels));
}

std::size_t Frame::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_->size(); ++i)
    if ((*labels_)[i] == label) return i;
  throw UnknownLabel("label not in frame: " + std::string(label));
}

Subset Frame::subset(std::initializer_list<std::string_view> members) const {
  std::uint64_t bits = 0;
  for (auto m : members) bits |= std::uint64_t{1} << index_of(m);
  return Subset(*this, bits);
}

Subset Frame::subset_of(std::span<const std::string> members) const {
  std::uint64_t bits = 0;
  for (const auto& m : members) bits |= std::uint64_t{1} << index_of(m);
  return Subset(*this, bits);
}

Subset Frame::from_bits(std::uint64_t bits) const {
  if ((bits & ~full_bits()) != 0)
    throw UnknownLabel("bit pattern addresses labels outside the frame");
  return Subset(*this, bits);
}

Subset Frame::full() const { return Subset(*this, full_bits()); }

Subset Frame::empty_set() const { return Subset(*this, 0); }

std::uint64_t Frame::full_bits() const {
  const std::size_t n = labels_->size();
  return n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

bool Frame::operator==(const Frame& other) const {
  return labels_ == other.labels_ || *labels_ == *other.labels_;
}

void require_same_frame(const Frame& a, const Frame& b) {
  if (a != b) throw FrameMismatch("operands belong to different frames");
}

// ---------------------------------------------------------------------------
// Subset

std::size_t Subset::count() const { return static_cast<std::size_t>(std::popcount(bits_)); }

Subset Subset::intersect(const Subset& other) const {
  require_same_frame(frame_, other.frame_);
  return Subset(frame_, bits_ & other.bits_);
}

Subset Subset::unite(const Subset& other) const {
  require_same_frame(frame_, other.frame_);
  return Subset(frame_, bits_ | other.bits_);
}

bool Subset::intersects(const Subset& other) const {
  require_same_frame(frame_, other.frame_);
  return (bits_ & other.bits_) != 0;
}

std::vector<std::string> Subset::member_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < frame_.size(); ++i)
    if (contains(i)) out.push_back(frame_.label(i));
  return out;
}

// ---------------------------------------------------------------------------
// MassFunction

MassFunction MassFunction::make(const Frame& frame,
                                std::span<const std::pair<Subset, double>> assignments) {
  std::vector<Focal> focal;
  focal.reserve(assignments.size());
  double sum = 0.0;
  for (const auto& [subset, mass] : assignments) {
    if (subset.frame() != frame)
      throw FrameMismatch("focal element bound to a different frame");
    if (subset.empty())
      throw EmptyFocalElement("mass on the empty set is not allowed");
    if (!(mass > 0.0))
      throw NonPositiveMass("focal mass must be strictly positive");
    focal.push_back({subset.bits(), mass});
    sum += mass;
  }
  std::sort(focal.begin(), focal.end(),
            [](const Focal& a, const Focal& b) { return a.bits < b.bits; });
  for (std::size_t i = 1; i < focal.size(); ++i)
    if (focal[i].bits == focal[i - 1].bits)
      throw DuplicateFocalElement("duplicate focal element " +
                                  describe_bits(frame, focal[i].bits));
  if (std::abs(sum - 1.0) > kMassSumTolerance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "masses sum to %.12g, expected 1", sum);
    throw MassSumOutOfTolerance(buf);
  }
  if (sum != 1.0)
    for (auto& f : focal) f.mass /= sum;
  return MassFunction(frame, std::move(focal));
}

MassFunction MassFunction::make(const Frame& frame,
                                std::initializer_list<std::pair<Subset, double>> assignments) {
  return make(frame, std::span<const std::pair<Subset, double>>(assignments.begin(),
                                                                assignments.size()));
}

MassFunction MassFunction::from_canonical(const Frame& frame, std::vector<Focal> focal) {
  std::erase_if(focal, [](const Focal& f) { return f.mass == 0.0; });
  std::sort(focal.begin(), focal.end(),
            [](const Focal& a, const Focal& b) { return a.bits < b.bits; });
  const std::uint64_t full = frame.full_bits();
  double sum = 0.0;
  for (std::size_t i = 0; i < focal.size(); ++i) {
    const Focal& f = focal[i];
    if (f.bits == 0) throw EmptyFocalElement("mass on the empty set is not allowed");
    if ((f.bits & ~full) != 0) throw UnknownLabel("focal bits outside the frame");
    if (!(f.mass > 0.0)) throw NonPositiveMass("focal mass must be strictly positive");
    if (i > 0 && f.bits == focal[i - 1].bits)
      throw DuplicateFocalElement("duplicate focal element");
    sum += f.mass;
  }
  if (std::abs(sum - 1.0) > kMassSumTolerance)
    throw MassSumOutOfTolerance("masses do not sum to 1");
  return MassFunction(frame, std::move(focal));
}

MassFunction MassFunction::vacuous(const Frame& frame) {
  return MassFunction(frame, {Focal{frame.full_bits(), 1.0}});
}

double MassFunction::mass(const Subset& a) const {
  require_same_frame(frame_, a.frame());
  return mass_bits(a.bits());
}

double MassFunction::mass_bits(std::uint64_t bits) const {
  auto it = std::lower_bound(
      focal_.begin(), focal_.end(), bits,
      [](const Focal& f, std::uint64_t b) { return f.bits < b; });
  return (it != focal_.end() && it->bits == bits) ? it->mass : 0.0;
}

double MassFunction::sum() const {
  double s = 0.0;
  for (const auto& f : focal_) s += f.mass;
  return s;
}

bool MassFunction::is_vacuous() const {
  return focal_.size() == 1 && focal_[0].bits == frame_.full_bits();
}

bool MassFunction::approx_equal(const MassFunction& other, double tol) const {
  if (frame_ != other.frame_ || focal_.size() != other.focal_.size()) return false;
  for (std::size_t i = 0; i < focal_.size(); ++i) {
    if (focal_[i].bits != other.focal_[i].bits) return false;
    if (std::abs(focal_[i].mass - other.focal_[i].mass) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// SimpleSupport

SimpleSupport::SimpleSupport(Subset f, double s) : focus(std::move(f)), support(s) {
  if (focus.empty()) throw EmptyFocalElement("simple support focus must be nonempty");
  if (focus.is_full())
    throw InvalidConfig("simple support focus must differ from the full frame");
  if (!(s > 0.0 && s < 1.0))
    throw NonPositiveMass("simple support value must lie in (0,1)");
}

MassFunction SimpleSupport::to_mass() const {
  const Frame& frame = focus.frame();
  return MassFunction::from_canonical(
      frame, {{focus.bits(), support}, {frame.full_bits(), 1.0 - support}});
}

// ---------------------------------------------------------------------------
// Combination

double pairwise_conflict(const MassFunction& m1, const MassFunction& m2) {
  require_same_frame(m1.frame(), m2.frame());
  double k = 0.0;
  for (const auto& f1 : m1.focal())
    for (const auto& f2 : m2.focal())
      if ((f1.bits & f2.bits) == 0) k += f1.mass * f2.mass;
  return k;
}

Combined combine_dempster(const MassFunction& m1, const MassFunction& m2) {
  require_same_frame(m1.frame(), m2.frame());
  std::unordered_map<std::uint64_t, double> acc;
  acc.reserve(m1.focal_count() * m2.focal_count());
  double k = 0.0;
  for (const auto& f1 : m1.focal()) {
    for (const auto& f2 : m2.focal()) {
      const std::uint64_t inter = f1.bits & f2.bits;
      const double p = f1.mass * f2.mass;
      if (inter == 0)
        k += p;
      else
        acc[inter] += p;
    }
  }
  if (1.0 - k <= 1e-12)
    throw TotalConflict("combination undefined: conflict is 1");
  std::vector<MassFunction::Focal> focal;
  focal.reserve(acc.size());
  if (k == 0.0) {
    // Conflict-free product: pass through untouched so combining with a
    // vacuous mass stays a bit-exact identity.
    for (const auto& [bits, mass] : acc) focal.push_back({bits, mass});
  } else {
    // The bucket sum equals 1 - k in exact arithmetic; dividing by the
    // realized sum instead keeps long high-conflict folds normalized, where
    // per-step rounding would otherwise be amplified by every later
    // 1/(1 - k) until the mass-sum tolerance is breached.
    double scale = 0.0;
    for (const auto& [bits, mass] : acc) scale += mass;
    for (const auto& [bits, mass] : acc) focal.push_back({bits, mass / scale});
  }
  return {MassFunction::from_canonical(m1.frame(), std::move(focal)), k};
}

Combined combine_all(std::span<const MassFunction> items) {
  if (items.empty()) throw EmptyInput("combine_all over an empty list");
  MassFunction acc = items[0];
  double survival = 1.0;  // prod(1 - k_step)
  for (std::size_t i = 1; i < items.size(); ++i) {
    Combined step = combine_dempster(acc, items[i]);
    survival *= 1.0 - step.conflict;
    acc = std::move(step.mass);
  }
  return {std::move(acc), 1.0 - survival};
}

namespace {

template <typename Get>
ClampedCombined combine_all_clamped_impl(std::size_t n, Get get) {
  if (n == 0) throw EmptyInput("combination over an empty list");
  MassFunction acc = get(0);
  double survival = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const MassFunction& next = get(i);
    const double k = pairwise_conflict(acc, next);
    if (1.0 - k <= 1e-12) {
      // Totally conflicting step: the combination is undefined from here on.
      return {std::move(acc), kConflictClamp, true};
    }
    Combined step = combine_dempster(acc, next);
    survival *= 1.0 - step.conflict;
    acc = std::move(step.mass);
  }
  return {std::move(acc), 1.0 - survival, false};
}

}  // namespace

ClampedCombined combine_all_clamped(std::span<const MassFunction> items) {
  return combine_all_clamped_impl(items.size(),
                                  [&](std::size_t i) -> const MassFunction& { return items[i]; });
}

ClampedCombined combine_all_clamped(std::span<const MassFunction* const> items) {
  return combine_all_clamped_impl(items.size(),
                                  [&](std::size_t i) -> const MassFunction& { return *items[i]; });
}

double plausibility(const MassFunction& m, const Subset& a) {
  require_same_frame(m.frame(), a.frame());
  double pls = 0.0;
  for (const auto& f : m.focal())
    if ((f.bits & a.bits()) != 0) pls += f.mass;
  return pls;
}

double weight_of_conflict(const SimpleSupport& s1, const SimpleSupport& s2) {
  require_same_frame(s1.focus.frame(), s2.focus.frame());
  if (s1.focus.intersects(s2.focus)) return 0.0;
  return -std::log1p(-s1.support * s2.support);
}

}  // namespace dsclust
