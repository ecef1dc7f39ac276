#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dsclust/evidence.hpp"

namespace dsclust::potts {

// Symmetric pairwise penalty matrix with zero diagonal.
class InteractionMatrix {
public:
  explicit InteractionMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * n_, n_};
  }

private:
  std::size_t n_;
  std::vector<double> data_;
};

// Annealing controls. `alpha` unset means the per-K default schedule:
// 1e-6 for K=8, 3e-7 for K=10, 3e-8 for K=11, 0 otherwise.
struct AnnealParams {
  int cluster_count = 2;          // K
  double gamma = 0.5;             // self-coupling reward for decisive spins
  std::optional<double> alpha;    // cluster-size pressure
  double epsilon = 0.001;         // noise amplitude
  double tau = 0.9;               // cooling factor
  double inner_tol = 0.01;        // mean |dV| per site ending a sweep loop
  double saturation = 0.99;       // mean sum V^2 per site ending the run
  std::uint64_t seed = 1;
  int max_outer = 1000;           // temperature steps before giving up
};

void validate(const AnnealParams& p);
double default_alpha(int cluster_count);

// Mean-field variables: V[i*K + a] is the expected membership of report i in
// cluster a; every row sums to 1.
struct SpinState {
  std::size_t n = 0;
  int cluster_count = 0;
  std::vector<double> v;
  double temperature = 0.0;
  int outer_steps = 0;     // temperature levels processed
  int inner_sweeps = 0;    // total site sweeps across all levels

  double at(std::size_t i, int a) const { return v[i * cluster_count + a]; }
  double saturation() const;  // (1/n) sum V^2
};

// Disjoint assignment of reports to clusters with per-cluster combination
// conflicts and the overall metaconflict 1 - prod(1 - c_i).
struct Partition {
  std::vector<int> assignment;           // report index -> cluster in [0, K)
  int cluster_count = 0;
  std::vector<double> cluster_conflicts; // c_i per cluster, 0 for empty ones
  std::vector<bool> conflict_clamped;    // c_i hit the total-conflict clamp
  double metaconflict = 0.0;

  std::vector<std::vector<std::size_t>> clusters() const;
  double max_cluster_conflict() const;
};

struct MeanFieldResult {
  std::vector<int> assignment;
  SpinState spins;
  bool converged = false;
};

struct AnnealResult {
  Partition partition;
  SpinState spins;
  bool converged = false;
};

// J_ij = -ln(1 - pairwise_conflict(m_i, m_j)), clamped at -ln(1e-12) when the
// pair conflicts totally. Restricts to -ln(1 - s_i s_j) for simple supports
// with disjoint foci and to 0 when the foci intersect.
InteractionMatrix interactions(std::span<const Report> reports);

// Starting temperature (1/K) max(-lambda_min, lambda_max) of
// M_ij = J_ij + alpha - gamma*delta_ij.
double critical_temperature(const InteractionMatrix& j, const AnnealParams& p);

// Extreme eigenvalues of a symmetric matrix (row-major, n*n) by shifted power
// iteration, relative tolerance 1e-6, at most 10000 iterations per phase.
std::pair<double, double> extreme_eigenvalues(std::span<const double> m, std::size_t n);

// Serial mean-field sweeps under geometric cooling, starting at the critical
// temperature. Deterministic given the seed.
MeanFieldResult anneal_spins(const InteractionMatrix& j, const AnnealParams& p);

// Full clustering of reports: builds interactions, anneals, and evaluates the
// resulting partition's per-cluster conflicts and metaconflict.
AnnealResult anneal(std::span<const Report> reports, const AnnealParams& p);

Partition make_partition(std::span<const Report> reports, std::span<const int> assignment,
                         int cluster_count);

// Cumulative Dempster conflict of the whole list; 0 for fewer than 2 reports.
ClampedConflict cluster_conflict(std::span<const Report> reports);
ClampedConflict cluster_conflict(std::span<const Report* const> reports);

// 1 - prod(1 - c_i).
double metaconflict(std::span<const double> cluster_conflicts);

// sum -ln(1 - c_i); metaconflict = 1 - exp(-result).
double metaconflict_weight_sum(std::span<const double> cluster_conflicts);

struct BruteForceCaps {
  std::size_t max_reports = 10;
  int max_clusters = 4;
};

// Exhaustive minimum-metaconflict partition into at most q unlabeled blocks;
// ties resolve to the first partition in restricted-growth enumeration order.
Partition brute_force_partition(std::span<const Report> reports, int q,
                                const BruteForceCaps& caps = {});

// Support values for generated benchmark instances.
struct SupportSpec {
  enum class Kind { fixed, range };
  Kind kind = Kind::range;
  double value = 0.5;            // fixed
  double lo = 0.1, hi = 0.9;     // range, drawn per report from `seed`
  std::uint64_t seed = 1;

  static SupportSpec fixed(double v);
  static SupportSpec range(double lo, double hi, std::uint64_t seed);
  static SupportSpec parse(std::string_view text, std::uint64_t seed);
};

// One simple-support report per nonempty subset of a K-label frame
// (2^K - 1 reports); the report focused on the full frame degenerates to the
// vacuous assignment. Admits a zero-metaconflict K-partition.
std::vector<Report> generate_benchmark(int cluster_count, const SupportSpec& support);

// Assigns each benchmark report to the cluster of its focus' lowest label;
// evaluates to metaconflict 0 by construction.
Partition benchmark_witness_partition(std::span<const Report> reports, int cluster_count);

// One-hot Potts energy of an assignment: pairwise same-cluster penalties,
// the -gamma/2 * n decisiveness term, and the alpha/2 * sum n_a^2 size term.
double potts_energy(const InteractionMatrix& j, std::span<const int> assignment,
                    int cluster_count, double gamma, double alpha);

struct AnnealRun {
  Partition partition;
  double runtime_ms = 0.0;
  int outer_steps = 0;
  int inner_sweeps = 0;
  bool converged = false;
};

struct PerformanceReport {
  std::size_t runs = 0;
  std::size_t converged_runs = 0;
  double mean_metaconflict = 0.0;
  double median_metaconflict = 0.0;
  double mean_per_cluster = 0.0;
  double median_per_cluster = 0.0;
  double mean_per_evidence = 0.0;
  double median_per_evidence = 0.0;
  double mean_runtime_ms = 0.0;
  double median_runtime_ms = 0.0;
  double total_runtime_ms = 0.0;
  double mean_inner_sweeps = 0.0;
};

// Aggregates per-run metrics: per-cluster = Mcf/q, per-evidence = Mcf/n.
PerformanceReport performance_report(std::span<const AnnealRun> runs);

}  // namespace dsclust::potts
