#include "dsclust/potts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include "dsclust/error.hpp"
#include "dsclust/rng.hpp"

namespace dsclust::potts {

namespace {

// Largest finite pairwise penalty, matching the conflict clamp 1 - 1e-12.
const double kMaxInteraction = -std::log(1e-12);

constexpr double kEigenTolerance = 1e-6;
constexpr int kEigenMaxIter = 10000;

// Largest eigenvalue of a symmetric positive semidefinite matrix by power
// iteration. A structured start such as the all-ones vector can be an exact
// non-dominant eigenvector (a fixpoint the iteration can never leave), so the
// start is a fixed-seed random vector; if an iterate lands in the kernel the
// search restarts from basis vectors in turn, so a zero result is only ever
// reported for the zero matrix.
double dominant_psd_eigenvalue(const std::vector<double>& a, std::size_t n) {
  Rng start_rng(0x9e3779b97f4a7c15ULL);
  std::vector<double> v(n);
  double start_norm = 0.0;
  for (double& x : v) {
    x = start_rng.uniform(-1.0, 1.0);
    start_norm += x * x;
  }
  start_norm = std::sqrt(start_norm);
  for (double& x : v) x /= start_norm;
  std::vector<double> av(n);
  double lambda = 0.0;
  std::size_t restart = 0;
  for (int iter = 0; iter < kEigenMaxIter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* row = a.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
      av[i] = acc;
    }
    double norm = std::sqrt(std::inner_product(av.begin(), av.end(), av.begin(), 0.0));
    if (norm < std::numeric_limits<double>::min()) {
      if (restart >= n) return 0.0;
      std::fill(v.begin(), v.end(), 0.0);
      v[restart++] = 1.0;
      continue;
    }
    double next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = av[i] / norm;
      next += v[i] * av[i];
    }
    if (iter > 0 && std::abs(next - lambda) <= kEigenTolerance * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean_of(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

void validate(const AnnealParams& p) {
  if (p.cluster_count < 1) throw KOutOfRange("cluster_count must be >= 1");
  if (!(p.gamma >= 0.0)) throw InvalidConfig("gamma must be >= 0");
  if (p.alpha && !(*p.alpha >= 0.0)) throw InvalidConfig("alpha must be >= 0");
  if (!(p.epsilon >= 0.0)) throw InvalidConfig("epsilon must be >= 0");
  if (!(p.tau > 0.0 && p.tau < 1.0)) throw InvalidConfig("tau must be in (0,1)");
  if (!(p.inner_tol > 0.0)) throw InvalidConfig("inner_tol must be > 0");
  if (!(p.saturation > 0.0 && p.saturation < 1.0)) {
    throw InvalidConfig("saturation must be in (0,1)");
  }
  if (p.max_outer < 1) throw InvalidConfig("max_outer must be >= 1");
}

double default_alpha(int cluster_count) {
  switch (cluster_count) {
    case 8: return 1e-6;
    case 10: return 3e-7;
    case 11: return 3e-8;
    default: return 0.0;
  }
}

double SpinState::saturation() const {
  double acc = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
  return acc / static_cast<double>(n);
}

std::vector<std::vector<std::size_t>> Partition::clusters() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[static_cast<std::size_t>(assignment[i])].push_back(i);
  }
  return out;
}

double Partition::max_cluster_conflict() const {
  double best = 0.0;
  for (double c : cluster_conflicts) best = std::max(best, c);
  return best;
}

InteractionMatrix interactions(std::span<const Report> reports) {
  if (reports.size() < 2) throw TooFewReports("interactions requires at least 2 reports");
  for (std::size_t i = 1; i < reports.size(); ++i) {
    require_same_frame(reports[0].mass.frame(), reports[i].mass.frame());
  }
  InteractionMatrix j(reports.size());
  for (std::size_t a = 0; a < reports.size(); ++a) {
    for (std::size_t b = a + 1; b < reports.size(); ++b) {
      double c = pairwise_conflict(reports[a].mass, reports[b].mass);
      double penalty = c >= kConflictClamp ? kMaxInteraction : -std::log1p(-c);
      j.set(a, b, penalty);
    }
  }
  return j;
}

std::pair<double, double> extreme_eigenvalues(std::span<const double> m, std::size_t n) {
  if (n == 0 || m.size() != n * n) throw InvalidConfig("matrix must be square and non-empty");
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(m[i * n + j]);
    bound = std::max(bound, row);
  }
  if (bound == 0.0) return {0.0, 0.0};

  // Both shifted matrices are positive semidefinite, so power iteration picks
  // out their top eigenvalue without sign ambiguity.
  std::vector<double> shifted(m.begin(), m.end());
  for (std::size_t i = 0; i < n; ++i) shifted[i * n + i] += bound;
  double lambda_max = dominant_psd_eigenvalue(shifted, n) - bound;

  shifted.assign(m.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) shifted[i * n + j] = -m[i * n + j];
    shifted[i * n + i] += bound;
  }
  double lambda_min = bound - dominant_psd_eigenvalue(shifted, n);
  return {lambda_min, lambda_max};
}

double critical_temperature(const InteractionMatrix& j, const AnnealParams& p) {
  validate(p);
  std::size_t n = j.size();
  if (n == 0) throw EmptyInput("interaction matrix is empty");
  double alpha = p.alpha ? *p.alpha : default_alpha(p.cluster_count);
  std::vector<double> m(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) m[a * n + b] = j.at(a, b) + alpha;
    m[a * n + a] -= p.gamma;
  }
  auto [lambda_min, lambda_max] = extreme_eigenvalues(m, n);
  double tc = std::max(-lambda_min, lambda_max) / static_cast<double>(p.cluster_count);
  if (!(tc > 0.0)) throw DegenerateMatrix("mean-field matrix has no spectral radius");
  return tc;
}

MeanFieldResult anneal_spins(const InteractionMatrix& j, const AnnealParams& p) {
  validate(p);
  const std::size_t n = j.size();
  if (n == 0) throw EmptyInput("interaction matrix is empty");
  const int k = p.cluster_count;
  const auto ku = static_cast<std::size_t>(k);
  const double alpha = p.alpha ? *p.alpha : default_alpha(k);

  SpinState state;
  state.n = n;
  state.cluster_count = k;
  state.v.resize(n * ku);
  state.temperature = critical_temperature(j, p);

  // Noise draws are consumed in a fixed order: the whole initial matrix
  // row-major, then one draw per (sweep, site, cluster) during the sweeps.
  Rng rng(p.seed);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t a = 0; a < ku; ++a) {
      double value = 1.0 / static_cast<double>(k) + p.epsilon * rng.uniform01();
      state.v[i * ku + a] = value;
      row_sum += value;
    }
    for (std::size_t a = 0; a < ku; ++a) state.v[i * ku + a] /= row_sum;
  }

  // A stuck inner loop (oscillation at one temperature) is abandoned after a
  // generous cap; cooling usually breaks the cycle on the next level.
  constexpr int kMaxSweepsPerLevel = 100000;

  std::vector<double> previous(state.v.size());
  std::vector<double> h(ku);
  bool converged = false;
  for (;;) {
    for (int sweep = 0; sweep < kMaxSweepsPerLevel; ++sweep) {
      previous = state.v;
      for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> row = j.row(i);
        for (std::size_t a = 0; a < ku; ++a) {
          double field = -p.gamma * state.v[i * ku + a];
          for (std::size_t jj = 0; jj < n; ++jj) {
            field += (row[jj] + alpha) * state.v[jj * ku + a];
          }
          h[a] = field;
        }
        double h_min = *std::min_element(h.begin(), h.end());
        double denom = 0.0;
        for (std::size_t a = 0; a < ku; ++a) {
          h[a] = std::exp(-(h[a] - h_min) / state.temperature);
          denom += h[a];
        }
        double row_sum = 0.0;
        for (std::size_t a = 0; a < ku; ++a) {
          double value = h[a] / denom + p.epsilon * rng.uniform01();
          state.v[i * ku + a] = value;
          row_sum += value;
        }
        for (std::size_t a = 0; a < ku; ++a) state.v[i * ku + a] /= row_sum;
      }
      ++state.inner_sweeps;
      double delta = 0.0;
      for (std::size_t idx = 0; idx < state.v.size(); ++idx) {
        delta += std::abs(state.v[idx] - previous[idx]);
      }
      if (delta / static_cast<double>(n) <= p.inner_tol) break;
    }
    state.temperature *= p.tau;
    ++state.outer_steps;
    if (state.saturation() >= p.saturation) {
      converged = true;
      break;
    }
    if (state.outer_steps >= p.max_outer) break;
  }

  std::vector<int> assignment(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (int a = 1; a < k; ++a) {
      if (state.v[i * ku + static_cast<std::size_t>(a)] >
          state.v[i * ku + static_cast<std::size_t>(best)]) {
        best = a;
      }
    }
    assignment[i] = best;
  }
  return {std::move(assignment), std::move(state), converged};
}

AnnealResult anneal(std::span<const Report> reports, const AnnealParams& p) {
  InteractionMatrix j = interactions(reports);
  MeanFieldResult mf = anneal_spins(j, p);
  Partition partition = make_partition(reports, mf.assignment, p.cluster_count);
  return {std::move(partition), std::move(mf.spins), mf.converged};
}

Partition make_partition(std::span<const Report> reports, std::span<const int> assignment,
                         int cluster_count) {
  if (cluster_count < 1) throw KOutOfRange("cluster_count must be >= 1");
  if (assignment.size() != reports.size()) {
    throw PartitionMismatch("assignment length does not match report count");
  }
  Partition out;
  out.assignment.assign(assignment.begin(), assignment.end());
  out.cluster_count = cluster_count;
  out.cluster_conflicts.assign(static_cast<std::size_t>(cluster_count), 0.0);
  out.conflict_clamped.assign(static_cast<std::size_t>(cluster_count), false);

  std::vector<std::vector<const Report*>> members(static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    int a = assignment[i];
    if (a < 0 || a >= cluster_count) {
      throw PartitionMismatch("cluster index out of range");
    }
    members[static_cast<std::size_t>(a)].push_back(&reports[i]);
  }
  double survive = 1.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    ClampedConflict c = cluster_conflict(std::span<const Report* const>(members[a]));
    out.cluster_conflicts[a] = c.value;
    out.conflict_clamped[a] = c.clamped;
    survive *= 1.0 - c.value;
  }
  out.metaconflict = 1.0 - survive;
  return out;
}

ClampedConflict cluster_conflict(std::span<const Report> reports) {
  std::vector<const Report*> ptrs;
  ptrs.reserve(reports.size());
  for (const Report& r : reports) ptrs.push_back(&r);
  return cluster_conflict(std::span<const Report* const>(ptrs));
}

ClampedConflict cluster_conflict(std::span<const Report* const> reports) {
  if (reports.size() < 2) return {0.0, false};
  std::vector<const MassFunction*> masses;
  masses.reserve(reports.size());
  for (const Report* r : reports) masses.push_back(&r->mass);
  ClampedCombined combined = combine_all_clamped(std::span<const MassFunction* const>(masses));
  return {combined.conflict, combined.clamped};
}

double metaconflict(std::span<const double> cluster_conflicts) {
  double survive = 1.0;
  for (double c : cluster_conflicts) survive *= 1.0 - c;
  return 1.0 - survive;
}

double metaconflict_weight_sum(std::span<const double> cluster_conflicts) {
  double sum = 0.0;
  for (double c : cluster_conflicts) {
    if (c >= 1.0) throw InfiniteWeight("cluster conflict of 1 has infinite weight");
    sum += -std::log1p(-c);
  }
  return sum;
}

Partition brute_force_partition(std::span<const Report> reports, int q,
                                const BruteForceCaps& caps) {
  const std::size_t n = reports.size();
  if (n == 0) throw EmptyInput("no reports to partition");
  if (q < 1) throw KOutOfRange("q must be >= 1");
  if (n > caps.max_reports || static_cast<std::size_t>(q) > static_cast<std::size_t>(caps.max_clusters)) {
    throw InstanceTooLarge("instance exceeds the exhaustive-search cap");
  }

  // Conflicts per block are memoized by membership bitmask; member order in a
  // block is ascending report index, the same fold order make_partition uses.
  std::vector<double> cache(std::size_t{1} << n, -1.0);
  auto block_conflict = [&](std::uint64_t mask) {
    double& slot = cache[mask];
    if (slot >= 0.0) return slot;
    std::vector<const Report*> members;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) members.push_back(&reports[i]);
    }
    slot = cluster_conflict(std::span<const Report* const>(members)).value;
    return slot;
  };

  // Restricted-growth strings enumerate partitions into at most q unlabeled
  // blocks exactly once, in a fixed order that settles ties.
  std::vector<int> a(n, 0);
  std::vector<int> prefix_max(n, 0);
  prefix_max[0] = -1;
  for (std::size_t i = 1; i < n; ++i) {
    prefix_max[i] = std::max(prefix_max[i - 1], a[i - 1]);
  }

  std::vector<int> best = a;
  double best_mcf = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> block_masks(static_cast<std::size_t>(q));
  for (;;) {
    std::fill(block_masks.begin(), block_masks.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      block_masks[static_cast<std::size_t>(a[i])] |= std::uint64_t{1} << i;
    }
    double survive = 1.0;
    for (std::uint64_t mask : block_masks) {
      if (std::popcount(mask) >= 2) survive *= 1.0 - block_conflict(mask);
    }
    double mcf = 1.0 - survive;
    if (mcf < best_mcf) {
      best_mcf = mcf;
      best = a;
    }

    std::size_t i = n - 1;
    while (i > 0 && (a[i] >= q - 1 || a[i] > prefix_max[i])) --i;
    if (i == 0) break;
    ++a[i];
    for (std::size_t jj = i + 1; jj < n; ++jj) {
      prefix_max[jj] = std::max(prefix_max[jj - 1], a[jj - 1]);
      a[jj] = 0;
    }
  }
  return make_partition(reports, best, q);
}

SupportSpec SupportSpec::fixed(double v) {
  SupportSpec s;
  s.kind = Kind::fixed;
  s.value = v;
  return s;
}

SupportSpec SupportSpec::range(double lo, double hi, std::uint64_t seed) {
  SupportSpec s;
  s.kind = Kind::range;
  s.lo = lo;
  s.hi = hi;
  s.seed = seed;
  return s;
}

SupportSpec SupportSpec::parse(std::string_view text, std::uint64_t seed) {
  auto parse_number = [](std::string_view part) {
    std::string buf(part);
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
      throw InvalidConfig("support spec expects numeric values");
    }
    return v;
  };
  SupportSpec spec;
  if (text.rfind("range:", 0) == 0) {
    std::string_view rest = text.substr(6);
    std::size_t sep = rest.find_first_of(",:");
    if (sep == std::string_view::npos) {
      throw InvalidConfig("range support spec is range:<lo>,<hi>");
    }
    spec = range(parse_number(rest.substr(0, sep)), parse_number(rest.substr(sep + 1)),
                 seed);
  } else if (text.rfind("fixed:", 0) == 0) {
    spec = fixed(parse_number(text.substr(6)));
  } else {
    spec = fixed(parse_number(text));
  }
  if (spec.kind == Kind::fixed && !(spec.value > 0.0 && spec.value < 1.0)) {
    throw InvalidConfig("fixed support must be in (0,1)");
  }
  if (spec.kind == Kind::range &&
      !(spec.lo > 0.0 && spec.lo <= spec.hi && spec.hi < 1.0)) {
    throw InvalidConfig("support range must satisfy 0 < lo <= hi < 1");
  }
  return spec;
}

std::vector<Report> generate_benchmark(int cluster_count, const SupportSpec& support) {
  if (cluster_count < 1 || cluster_count > 16) {
    throw KOutOfRange("benchmark frame size must be in [1,16]");
  }
  if (support.kind == SupportSpec::Kind::fixed) {
    if (!(support.value > 0.0 && support.value < 1.0)) {
      throw InvalidConfig("fixed support must be in (0,1)");
    }
  } else if (!(support.lo > 0.0 && support.lo <= support.hi && support.hi < 1.0)) {
    throw InvalidConfig("support range must satisfy 0 < lo <= hi < 1");
  }

  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(cluster_count));
  for (int i = 1; i <= cluster_count; ++i) labels.push_back(std::to_string(i));
  Frame frame(std::move(labels));

  Rng rng(support.seed);
  std::vector<Report> reports;
  const std::uint64_t total = (std::uint64_t{1} << cluster_count) - 1;
  reports.reserve(total);
  for (std::uint64_t bits = 1; bits <= total; ++bits) {
    double s = support.kind == SupportSpec::Kind::fixed ? support.value
                                                        : rng.uniform(support.lo, support.hi);
    // Support on the whole frame asserts nothing: that report degenerates to
    // the vacuous assignment (the draw is still consumed to keep the stream
    // aligned across kinds).
    MassFunction mass = bits == frame.full_bits()
                            ? MassFunction::vacuous(frame)
                            : SimpleSupport(frame.from_bits(bits), s).to_mass();
    reports.push_back(Report{"e" + std::to_string(bits), static_cast<double>(bits),
                             std::move(mass), "bench"});
  }
  return reports;
}

Partition benchmark_witness_partition(std::span<const Report> reports, int cluster_count) {
  if (reports.empty()) throw EmptyInput("no reports to partition");
  std::vector<int> assignment(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    // The focus is the smallest focal element; a vacuous report's focus is
    // the whole frame. Routing by lowest member keeps every pair in a
    // cluster overlapping, so each cluster combines without conflict.
    std::uint64_t bits = reports[i].mass.focal().front().bits;
    assignment[i] = std::countr_zero(bits);
  }
  return make_partition(reports, assignment, cluster_count);
}

double potts_energy(const InteractionMatrix& j, std::span<const int> assignment,
                    int cluster_count, double gamma, double alpha) {
  if (assignment.size() != j.size()) {
    throw PartitionMismatch("assignment length does not match matrix size");
  }
  double pairwise = 0.0;
  for (std::size_t a = 0; a < assignment.size(); ++a) {
    for (std::size_t b = a + 1; b < assignment.size(); ++b) {
      if (assignment[a] == assignment[b]) pairwise += j.at(a, b);
    }
  }
  std::vector<double> sizes(static_cast<std::size_t>(cluster_count), 0.0);
  for (int a : assignment) sizes[static_cast<std::size_t>(a)] += 1.0;
  double size_term = 0.0;
  for (double s : sizes) size_term += s * s;
  return pairwise - 0.5 * gamma * static_cast<double>(assignment.size()) +
         0.5 * alpha * size_term;
}

PerformanceReport performance_report(std::span<const AnnealRun> runs) {
  if (runs.empty()) throw EmptyInput("no runs to aggregate");
  std::vector<double> mcf, per_cluster, per_evidence, runtime;
  double sweeps = 0.0;
  PerformanceReport out;
  out.runs = runs.size();
  for (const AnnealRun& run : runs) {
    double q = static_cast<double>(run.partition.cluster_count);
    double n = static_cast<double>(run.partition.assignment.size());
    mcf.push_back(run.partition.metaconflict);
    per_cluster.push_back(run.partition.metaconflict / q);
    per_evidence.push_back(run.partition.metaconflict / n);
    runtime.push_back(run.runtime_ms);
    sweeps += run.inner_sweeps;
    if (run.converged) ++out.converged_runs;
  }
  out.mean_metaconflict = mean_of(mcf);
  out.median_metaconflict = median_of(mcf);
  out.mean_per_cluster = mean_of(per_cluster);
  out.median_per_cluster = median_of(per_cluster);
  out.mean_per_evidence = mean_of(per_evidence);
  out.median_per_evidence = median_of(per_evidence);
  out.mean_runtime_ms = mean_of(runtime);
  out.median_runtime_ms = median_of(runtime);
  out.total_runtime_ms = std::accumulate(runtime.begin(), runtime.end(), 0.0);
  out.mean_inner_sweeps = sweeps / static_cast<double>(runs.size());
  return out;
}

}  // namespace dsclust::potts
