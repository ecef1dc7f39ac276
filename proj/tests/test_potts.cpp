#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "dsclust/potts.hpp"
#include "dsclust/rng.hpp"
#include "helpers.hpp"

using namespace dsclust;
using namespace dsclust::potts;
using testing::abc_frame;
using testing::numeric_frame;
using testing::support_report;

TEST_SUITE_BEGIN("potts");

TEST_CASE("anneal parameter validation") {
  AnnealParams p;
  CHECK_NOTHROW(validate(p));

  auto expect = [](auto mutate, auto&& probe) {
    AnnealParams bad;
    mutate(bad);
    probe(bad);
  };
  expect([](AnnealParams& p) { p.cluster_count = 0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), KOutOfRange); });
  expect([](AnnealParams& p) { p.gamma = -0.1; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.alpha = -1e-9; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.epsilon = -0.001; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.tau = 1.0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.tau = 0.0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.inner_tol = 0.0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.saturation = 1.0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
  expect([](AnnealParams& p) { p.max_outer = 0; },
         [](const AnnealParams& p) { CHECK_THROWS_AS(validate(p), InvalidConfig); });
}

TEST_CASE("cluster-size pressure defaults follow the frame size") {
  CHECK(default_alpha(8) == 1e-6);
  CHECK(default_alpha(10) == 3e-7);
  CHECK(default_alpha(11) == 3e-8);
  CHECK(default_alpha(2) == 0.0);
  CHECK(default_alpha(9) == 0.0);
}

TEST_CASE("interaction matrix from reports") {
  Frame f = abc_frame();
  std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                 support_report("r2", f, 0b010, 0.5),
                                 support_report("r3", f, 0b011, 0.8)};
  InteractionMatrix j = interactions(reports);
  CHECK(j.at(0, 1) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(j.at(0, 2) == 0.0);  // foci intersect
  CHECK(j.at(0, 0) == 0.0);
  CHECK(j.at(1, 2) == j.at(2, 1));

  std::vector<Report> one = {reports[0]};
  CHECK_THROWS_AS(interactions(one), TooFewReports);

  Frame other = numeric_frame(3);
  std::vector<Report> mixed = {reports[0], support_report("x", other, 0b001, 0.5)};
  CHECK_THROWS_AS(interactions(mixed), FrameMismatch);
}

TEST_CASE("totally conflicting pairs clamp at the maximum interaction") {
  Frame f = abc_frame();
  Report ca{"ca", 0.0, MassFunction::make(f, {{f.subset({"a"}), 1.0}}), ""};
  Report cb{"cb", 0.0, MassFunction::make(f, {{f.subset({"b"}), 1.0}}), ""};
  std::vector<Report> reports = {ca, cb};
  InteractionMatrix j = interactions(reports);
  CHECK(j.at(0, 1) == -std::log(1e-12));
}

TEST_CASE("critical temperature") {
  SUBCASE("pure self-coupling reads the temperature off the diagonal") {
    InteractionMatrix j(2);
    AnnealParams p;
    p.cluster_count = 2;
    p.gamma = 0.5;
    p.alpha = 0.0;
    CHECK(critical_temperature(j, p) == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("formula arithmetic on a crafted spectrum") {
    // M = J - 0.5 I with J_12 = 1.5 has eigenvalues 1 and -2.
    InteractionMatrix j(2);
    j.set(0, 1, 1.5);
    AnnealParams p;
    p.cluster_count = 4;
    p.gamma = 0.5;
    p.alpha = 0.0;
    CHECK(critical_temperature(j, p) == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("scaling the interactions scales the temperature") {
    InteractionMatrix j(3);
    j.set(0, 1, 0.4);
    j.set(1, 2, 0.7);
    j.set(0, 2, 0.1);
    InteractionMatrix scaled(3);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b) scaled.set(a, b, 3.0 * j.at(a, b));
    AnnealParams p;
    p.cluster_count = 2;
    p.gamma = 0.0;
    p.alpha = 0.0;
    CHECK(critical_temperature(scaled, p) ==
          doctest::Approx(3.0 * critical_temperature(j, p)).epsilon(1e-6));
  }
  SUBCASE("an all-zero mean-field matrix is degenerate") {
    InteractionMatrix j(2);
    AnnealParams p;
    p.cluster_count = 2;
    p.gamma = 0.0;
    p.alpha = 0.0;
    CHECK_THROWS_AS(critical_temperature(j, p), DegenerateMatrix);
  }
  SUBCASE("an empty matrix is rejected") {
    InteractionMatrix j(0);
    AnnealParams p;
    CHECK_THROWS_AS(critical_temperature(j, p), EmptyInput);
  }
}

TEST_CASE("extreme eigenvalues of small symmetric matrices") {
  SUBCASE("off-diagonal 2x2") {
    std::vector<double> m = {2.0, 1.0, 1.0, 2.0};
    auto [lo, hi] = extreme_eigenvalues(m, 2);
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(hi == doctest::Approx(3.0).epsilon(1e-5));
  }
  SUBCASE("diagonal with mixed signs") {
    std::vector<double> m = {1.0, 0.0, 0.0, -2.0};
    auto [lo, hi] = extreme_eigenvalues(m, 2);
    CHECK(lo == doctest::Approx(-2.0).epsilon(1e-5));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("zero matrix") {
    std::vector<double> m = {0.0, 0.0, 0.0, 0.0};
    auto [lo, hi] = extreme_eigenvalues(m, 2);
    CHECK(lo == 0.0);
    CHECK(hi == 0.0);
  }
  SUBCASE("dimension mismatch is rejected") {
    std::vector<double> m = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(extreme_eigenvalues(m, 2), InvalidConfig);
  }
}

TEST_CASE("two conflicting reports separate at K=2") {
  Frame f = abc_frame();
  std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                 support_report("r2", f, 0b010, 0.5)};
  AnnealParams p;
  p.cluster_count = 2;
  p.seed = 1;
  AnnealResult result = anneal(reports, p);
  CHECK(result.converged);
  CHECK(result.partition.assignment[0] != result.partition.assignment[1]);
  CHECK(result.partition.metaconflict == 0.0);
}

TEST_CASE("a single cluster swallows everything") {
  Frame f = abc_frame();
  std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                 support_report("r2", f, 0b010, 0.5),
                                 support_report("r3", f, 0b100, 0.5)};
  AnnealParams p;
  p.cluster_count = 1;
  AnnealResult result = anneal(reports, p);
  for (int a : result.partition.assignment) CHECK(a == 0);
  CHECK(result.partition.metaconflict ==
        doctest::Approx(cluster_conflict(reports).value).epsilon(1e-12));
}

TEST_CASE("annealing is deterministic for a fixed seed") {
  std::vector<Report> reports = generate_benchmark(3, SupportSpec::range(0.1, 0.9, 5));
  AnnealParams p;
  p.cluster_count = 3;
  p.seed = 42;
  AnnealResult a = anneal(reports, p);
  AnnealResult b = anneal(reports, p);
  CHECK(a.partition.assignment == b.partition.assignment);
  CHECK(a.spins.outer_steps == b.spins.outer_steps);
  CHECK(a.spins.inner_sweeps == b.spins.inner_sweeps);
  CHECK(a.spins.v == b.spins.v);
}

TEST_CASE("spin rows stay normalized and converged runs saturate") {
  std::vector<Report> reports = generate_benchmark(3, SupportSpec::fixed(0.5));
  AnnealParams p;
  p.cluster_count = 3;
  p.seed = 2;
  AnnealResult result = anneal(reports, p);
  REQUIRE(result.converged);
  const SpinState& spins = result.spins;
  for (std::size_t i = 0; i < spins.n; ++i) {
    double row = 0.0;
    for (int a = 0; a < spins.cluster_count; ++a) row += spins.at(i, a);
    CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(spins.saturation() >= p.saturation);
}

TEST_CASE("giving up returns a flagged partial result") {
  std::vector<Report> reports = generate_benchmark(4, SupportSpec::fixed(0.5));
  AnnealParams p;
  p.cluster_count = 4;
  p.max_outer = 1;
  AnnealResult result = anneal(reports, p);
  CHECK_FALSE(result.converged);
  CHECK(result.partition.assignment.size() == reports.size());
  for (int a : result.partition.assignment) {
    CHECK(a >= 0);
    CHECK(a < 4);
  }
}

TEST_CASE("partition metaconflict ties out against both formulations") {
  std::vector<Report> reports = generate_benchmark(4, SupportSpec::range(0.1, 0.9, 9));
  AnnealParams p;
  p.cluster_count = 4;
  p.seed = 3;
  Partition partition = anneal(reports, p).partition;
  double product = 1.0;
  for (double c : partition.cluster_conflicts) product *= 1.0 - c;
  CHECK(partition.metaconflict == doctest::Approx(1.0 - product).epsilon(1e-9));
  CHECK(partition.metaconflict ==
        doctest::Approx(1.0 - std::exp(-metaconflict_weight_sum(
                                  partition.cluster_conflicts)))
            .epsilon(1e-9));
}

TEST_CASE("anneal composes interactions and anneal_spins") {
  std::vector<Report> reports = generate_benchmark(3, SupportSpec::fixed(0.6));
  AnnealParams p;
  p.cluster_count = 3;
  p.seed = 8;
  AnnealResult full = anneal(reports, p);
  MeanFieldResult direct = anneal_spins(interactions(reports), p);
  CHECK(full.partition.assignment == direct.assignment);
  CHECK(full.spins.v == direct.spins.v);
  CHECK(full.converged == direct.converged);
}

TEST_CASE("cluster conflict") {
  Frame f = abc_frame();
  std::vector<Report> disjoint = {support_report("r1", f, 0b001, 0.5),
                                  support_report("r2", f, 0b010, 0.5)};
  ClampedConflict c = cluster_conflict(disjoint);
  CHECK(c.value == 0.25);
  CHECK_FALSE(c.clamped);

  std::vector<Report> one = {disjoint[0]};
  CHECK(cluster_conflict(one).value == 0.0);
  CHECK(cluster_conflict(std::span<const Report>{}).value == 0.0);

  std::vector<Report> overlapping = {support_report("r1", f, 0b011, 0.7),
                                     support_report("r2", f, 0b110, 0.9),
                                     support_report("r3", f, 0b010, 0.4)};
  CHECK(cluster_conflict(overlapping).value == 0.0);

  Report ca{"ca", 0.0, MassFunction::make(f, {{f.subset({"a"}), 1.0}}), ""};
  Report cb{"cb", 0.0, MassFunction::make(f, {{f.subset({"b"}), 1.0}}), ""};
  std::vector<Report> total = {ca, cb};
  ClampedConflict clamped = cluster_conflict(total);
  CHECK(clamped.clamped);
  CHECK(clamped.value == kConflictClamp);
}

TEST_CASE("metaconflict and its weight-sum form") {
  std::vector<double> cs = {0.3, 0.2};
  CHECK(metaconflict(cs) == doctest::Approx(0.44).epsilon(1e-12));
  CHECK(metaconflict_weight_sum(cs) == doctest::Approx(0.579818).epsilon(1e-5));
  CHECK(1.0 - std::exp(-metaconflict_weight_sum(cs)) ==
        doctest::Approx(0.44).epsilon(1e-12));

  std::vector<double> zeros = {0.0, 0.0, 0.0};
  CHECK(metaconflict(zeros) == 0.0);
  CHECK(metaconflict_weight_sum(zeros) == 0.0);

  std::vector<double> absorbing = {0.3, 1.0};
  CHECK(metaconflict(absorbing) == 1.0);
  CHECK_THROWS_AS(metaconflict_weight_sum(absorbing), InfiniteWeight);

  std::vector<double> reordered = {0.2, 0.3};
  CHECK(metaconflict_weight_sum(reordered) ==
        doctest::Approx(metaconflict_weight_sum(cs)).epsilon(1e-12));
}

TEST_CASE("brute force partition") {
  Frame f = abc_frame();
  SUBCASE("two conflicting reports are separated") {
    std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                   support_report("r2", f, 0b010, 0.5)};
    Partition best = brute_force_partition(reports, 2);
    CHECK(best.metaconflict == 0.0);
    CHECK(best.assignment[0] != best.assignment[1]);
  }
  SUBCASE("q=1 degenerates to the whole-list conflict") {
    std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                   support_report("r2", f, 0b010, 0.5),
                                   support_report("r3", f, 0b100, 0.5)};
    Partition best = brute_force_partition(reports, 1);
    CHECK(best.metaconflict ==
          doctest::Approx(cluster_conflict(reports).value).epsilon(1e-12));
  }
  SUBCASE("ties resolve to the first enumerated partition") {
    // Mutually compatible reports: every partition scores 0; the first
    // restricted-growth string puts everything into one block.
    std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                   support_report("r2", f, 0b011, 0.5),
                                   support_report("r3", f, 0b101, 0.5)};
    Partition best = brute_force_partition(reports, 2);
    CHECK(best.metaconflict == 0.0);
    CHECK(best.assignment == std::vector<int>{0, 0, 0});
  }
  SUBCASE("caps reject oversized instances") {
    std::vector<Report> many;
    for (int i = 0; i < 11; ++i) {
      many.push_back(support_report("r" + std::to_string(i), f, 0b001, 0.5));
    }
    CHECK_THROWS_AS(brute_force_partition(many, 2), InstanceTooLarge);
    std::vector<Report> few(many.begin(), many.begin() + 4);
    CHECK_THROWS_AS(brute_force_partition(few, 5), InstanceTooLarge);
  }
  SUBCASE("degenerate inputs") {
    std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5)};
    CHECK_THROWS_AS(brute_force_partition({}, 2), EmptyInput);
    CHECK_THROWS_AS(brute_force_partition(reports, 0), KOutOfRange);
  }
}

TEST_CASE("make_partition validates the assignment") {
  Frame f = abc_frame();
  std::vector<Report> reports = {support_report("r1", f, 0b001, 0.5),
                                 support_report("r2", f, 0b010, 0.5)};
  std::vector<int> short_assign = {0};
  CHECK_THROWS_AS(make_partition(reports, short_assign, 2), PartitionMismatch);
  std::vector<int> out_of_range = {0, 2};
  CHECK_THROWS_AS(make_partition(reports, out_of_range, 2), PartitionMismatch);
  std::vector<int> ok = {0, 1};
  CHECK_THROWS_AS(make_partition(reports, ok, 0), KOutOfRange);

  Partition p = make_partition(reports, ok, 2);
  CHECK(p.cluster_conflicts == std::vector<double>{0.0, 0.0});
  CHECK(p.clusters()[0] == std::vector<std::size_t>{0});
  CHECK(p.max_cluster_conflict() == 0.0);
}

TEST_CASE("support spec parsing") {
  CHECK(SupportSpec::parse("0.5", 1).kind == SupportSpec::Kind::fixed);
  CHECK(SupportSpec::parse("0.5", 1).value == 0.5);
  CHECK(SupportSpec::parse("fixed:0.7", 1).value == 0.7);
  SupportSpec range = SupportSpec::parse("range:0.2,0.8", 9);
  CHECK(range.kind == SupportSpec::Kind::range);
  CHECK(range.lo == 0.2);
  CHECK(range.hi == 0.8);
  CHECK(range.seed == 9);
  CHECK(SupportSpec::parse("range:0.2:0.8", 1).hi == 0.8);
  CHECK_THROWS_AS(SupportSpec::parse("garbage", 1), InvalidConfig);
  CHECK_THROWS_AS(SupportSpec::parse("1.5", 1), InvalidConfig);
  CHECK_THROWS_AS(SupportSpec::parse("range:0.8,0.2", 1), InvalidConfig);
}

TEST_CASE("benchmark generation") {
  SUBCASE("K=2 yields one report per nonempty subset") {
    std::vector<Report> reports = generate_benchmark(2, SupportSpec::fixed(0.6));
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].mass.focal().front().bits == 0b01);
    CHECK(reports[1].mass.focal().front().bits == 0b10);
    CHECK(reports[2].mass.is_vacuous());  // the full-frame subset asserts nothing
    CHECK(reports[0].mass.focal().front().mass == 0.6);
  }
  SUBCASE("K=1 degenerates to a single vacuous report") {
    std::vector<Report> reports = generate_benchmark(1, SupportSpec::fixed(0.5));
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].mass.is_vacuous());
  }
  SUBCASE("K bounds") {
    CHECK_THROWS_AS(generate_benchmark(0, SupportSpec::fixed(0.5)), KOutOfRange);
    CHECK_THROWS_AS(generate_benchmark(17, SupportSpec::fixed(0.5)), KOutOfRange);
  }
  SUBCASE("ranged supports are deterministic per seed") {
    std::vector<Report> a = generate_benchmark(3, SupportSpec::range(0.1, 0.9, 7));
    std::vector<Report> b = generate_benchmark(3, SupportSpec::range(0.1, 0.9, 7));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(testing::same_mass_bits(a[i].mass, b[i].mass));
    }
  }
}

TEST_CASE("the witness partition scores exactly zero") {
  for (int k : {2, 3, 4, 5}) {
    std::vector<Report> reports = generate_benchmark(k, SupportSpec::range(0.1, 0.9, 13));
    Partition witness = benchmark_witness_partition(reports, k);
    CHECK(witness.metaconflict == 0.0);
    for (double c : witness.cluster_conflicts) CHECK(c == 0.0);
  }
}

TEST_CASE("one-hot energy accounting") {
  InteractionMatrix j(2);
  j.set(0, 1, 0.8);
  std::vector<int> together = {0, 0};
  std::vector<int> apart = {0, 1};
  double gamma = 0.5;
  double alpha = 0.01;
  // Same cluster: the pair penalty plus the size term (2^2); apart: 1^2 + 1^2.
  CHECK(potts_energy(j, together, 2, gamma, alpha) ==
        doctest::Approx(0.8 - gamma + alpha * 2.0).epsilon(1e-12));
  CHECK(potts_energy(j, apart, 2, gamma, alpha) ==
        doctest::Approx(-gamma + alpha).epsilon(1e-12));
}

TEST_CASE("converged benchmark runs sit in energy local minima") {
  std::vector<Report> reports = generate_benchmark(3, SupportSpec::range(0.1, 0.9, 21));
  InteractionMatrix j = interactions(reports);
  int audited = 0;
  int passed = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    AnnealParams p;
    p.cluster_count = 3;
    p.seed = seed;
    AnnealResult result = anneal(reports, p);
    if (!result.converged) continue;
    ++audited;
    std::vector<int> assign = result.partition.assignment;
    double base = potts_energy(j, assign, 3, p.gamma, default_alpha(3));
    bool improvable = false;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      int original = assign[i];
      for (int a = 0; a < 3; ++a) {
        if (a == original) continue;
        assign[i] = a;
        double moved = potts_energy(j, assign, 3, p.gamma, default_alpha(3));
        improvable = improvable || moved < base - 1e-9;
      }
      assign[i] = original;
    }
    if (!improvable) ++passed;
  }
  REQUIRE(audited > 0);
  INFO("local-minimum audit: ", passed, "/", audited);
  CHECK(static_cast<double>(passed) >= 0.95 * static_cast<double>(audited));
}

TEST_CASE("performance aggregation") {
  CHECK_THROWS_AS(performance_report({}), EmptyInput);

  Partition zero;
  zero.assignment = {0, 1};
  zero.cluster_count = 2;
  zero.cluster_conflicts = {0.0, 0.0};
  zero.conflict_clamped = {false, false};
  zero.metaconflict = 0.0;
  std::vector<AnnealRun> single = {AnnealRun{zero, 0.0, 1, 1, true}};
  PerformanceReport r0 = performance_report(single);
  CHECK(r0.mean_metaconflict == 0.0);
  CHECK(r0.median_per_evidence == 0.0);
  CHECK(r0.converged_runs == 1);

  Partition p;
  p.assignment = std::vector<int>(10, 0);
  for (std::size_t i = 5; i < 10; ++i) p.assignment[i] = 1;
  p.cluster_count = 2;
  p.cluster_conflicts = {0.3, 0.2};
  p.conflict_clamped = {false, false};
  p.metaconflict = 0.44;
  std::vector<AnnealRun> runs = {AnnealRun{p, 1.0, 2, 4, true}};
  PerformanceReport r = performance_report(runs);
  CHECK(r.mean_per_cluster == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(r.mean_per_evidence == doctest::Approx(0.044).epsilon(1e-12));
}

TEST_SUITE_END();
