#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "curselab/assign.hpp"
#include "curselab/common.hpp"
#include "curselab/rng.hpp"
#include "curselab/tabular.hpp"

using namespace curselab;
using assign::AssignmentInstance;

namespace {

struct BruteResult {
  double objective = 0.0;
  std::vector<int> best;  // lexicographically smallest optimum
  bool found = false;
};

/// Exhaustive search in lexicographic assignment order, keeping the first
/// assignment that attains the maximum. Exact equality is meaningful when
/// scores are dyadic rationals.
BruteResult brute_force(const AssignmentInstance& inst) {
  int n = inst.num_refugees();
  int L = inst.num_locations();
  BruteResult out;
  std::vector<int> current(static_cast<std::size_t>(n), 0);
  std::vector<int> used(static_cast<std::size_t>(L), 0);

  auto recurse = [&](auto&& self, int i, double acc) -> void {
    if (i == n) {
      if (!out.found || acc > out.objective) {
        out.objective = acc;
        out.best = current;
        out.found = true;
      }
      return;
    }
    for (int t = 0; t < L; ++t) {
      if (used[static_cast<std::size_t>(t)] >=
          inst.capacities[static_cast<std::size_t>(t)])
        continue;
      used[static_cast<std::size_t>(t)]++;
      current[static_cast<std::size_t>(i)] = t;
      self(self, i + 1,
           acc + inst.scores[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(t)]);
      used[static_cast<std::size_t>(t)]--;
    }
  };
  recurse(recurse, 0, 0.0);
  return out;
}

AssignmentInstance random_instance(rng::Rng& r, bool dyadic) {
  AssignmentInstance inst;
  int n = 1 + static_cast<int>(r.uniform_int(8));
  int L = 1 + static_cast<int>(r.uniform_int(4));
  inst.capacities.assign(static_cast<std::size_t>(L), 0);
  for (int i = 0; i < n; ++i)
    inst.capacities[static_cast<std::size_t>(r.uniform_int(
        static_cast<std::uint64_t>(L)))]++;
  // Sometimes leave slack so not every matching is at full capacity.
  for (int t = 0; t < L; ++t)
    if (r.bernoulli(0.3))
      inst.capacities[static_cast<std::size_t>(t)] +=
          static_cast<int>(r.uniform_int(3));
  inst.scores.assign(static_cast<std::size_t>(n),
                     std::vector<double>(static_cast<std::size_t>(L), 0.0));
  for (auto& row : inst.scores)
    for (double& s : row)
      s = dyadic ? static_cast<double>(
                       static_cast<long>(r.uniform_int(129)) - 64) /
                       64.0
                 : r.uniform(-1.0, 1.0);
  return inst;
}

double matching_objective(const AssignmentInstance& inst,
                          const std::vector<int>& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    total += inst.scores[i][static_cast<std::size_t>(a[i])];
  return total;
}

void check_feasible(const AssignmentInstance& inst,
                    const std::vector<int>& a) {
  REQUIRE(a.size() == inst.scores.size());
  std::vector<int> used(static_cast<std::size_t>(inst.num_locations()), 0);
  for (int t : a) {
    REQUIRE(t >= 0);
    REQUIRE(t < inst.num_locations());
    used[static_cast<std::size_t>(t)]++;
  }
  for (int t = 0; t < inst.num_locations(); ++t)
    CHECK(used[static_cast<std::size_t>(t)] <=
          inst.capacities[static_cast<std::size_t>(t)]);
}

}  // namespace

TEST_CASE("dyadic random instances: exact optimum and lexicographic ties") {
  rng::Rng r(20240801);
  for (int trial = 0; trial < 500; ++trial) {
    AssignmentInstance inst = random_instance(r, true);
    BruteResult want = brute_force(inst);
    REQUIRE(want.found);
    assign::SolveResult got = assign::solve(inst);
    check_feasible(inst, got.matching.assignment);
    CHECK(got.objective == want.objective);
    CHECK(matching_objective(inst, got.matching.assignment) == want.objective);
    CHECK(got.matching.assignment == want.best);
    CHECK(assign::certificate_ok(inst, got));
  }
}

TEST_CASE("continuous random instances: optimum within tolerance") {
  rng::Rng r(20240802);
  for (int trial = 0; trial < 500; ++trial) {
    AssignmentInstance inst = random_instance(r, false);
    BruteResult want = brute_force(inst);
    assign::SolveResult got = assign::solve(inst);
    check_feasible(inst, got.matching.assignment);
    CHECK(std::abs(got.objective - want.objective) < 1e-9);
    CHECK(std::abs(matching_objective(inst, got.matching.assignment) -
                   got.objective) < 1e-9);
    CHECK(assign::certificate_ok(inst, got));
  }
}

TEST_CASE("two-by-two example") {
  AssignmentInstance inst;
  inst.scores = {{0.9, 0.1}, {0.8, 0.7}};
  inst.capacities = {1, 1};
  assign::SolveResult got = assign::solve(inst);
  CHECK(got.matching.assignment == std::vector<int>{0, 1});
  CHECK(got.objective == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("equal scores give the lexicographically smallest matching") {
  AssignmentInstance inst;
  inst.scores.assign(3, std::vector<double>(2, 0.5));
  inst.capacities = {2, 2};
  assign::SolveResult got = assign::solve(inst);
  CHECK(got.matching.assignment == std::vector<int>{0, 0, 1});
  CHECK(got.objective == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("single location with spare capacity takes everyone") {
  AssignmentInstance inst;
  inst.scores.assign(4, std::vector<double>{-0.25, 0.0, 0.0});
  inst.capacities = {5, 0, 0};
  assign::SolveResult got = assign::solve(inst);
  CHECK(got.matching.assignment == std::vector<int>(4, 0));
}

TEST_CASE("adding a constant to one refugee's row keeps the matching") {
  rng::Rng r(20240803);
  for (int trial = 0; trial < 100; ++trial) {
    AssignmentInstance inst = random_instance(r, true);
    assign::SolveResult base = assign::solve(inst);
    AssignmentInstance shifted = inst;
    int i = static_cast<int>(
        r.uniform_int(static_cast<std::uint64_t>(inst.num_refugees())));
    for (double& s : shifted.scores[static_cast<std::size_t>(i)]) s += 2.25;
    assign::SolveResult got = assign::solve(shifted);
    CHECK(got.matching.assignment == base.matching.assignment);
    CHECK(got.objective == doctest::Approx(base.objective + 2.25));
  }
}

TEST_CASE("infeasible capacities are rejected") {
  AssignmentInstance inst;
  inst.scores.assign(3, std::vector<double>(2, 0.0));
  inst.capacities = {1, 1};
  CHECK_THROWS_AS(assign::solve(inst), Error);
}

TEST_CASE("capacities_from_observed counts logged locations") {
  tabular::Dataset d;
  d.num_locations = 4;
  d.locations = {0, 0, 1, 3, 1, 0};
  std::vector<int> caps = assign::capacities_from_observed(d);
  CHECK(caps == std::vector<int>{3, 2, 0, 1});
  int total = 0;
  for (int c : caps) total += c;
  CHECK(total == static_cast<int>(d.locations.size()));

  tabular::Dataset shuffled = d;
  shuffled.locations = {1, 3, 0, 0, 0, 1};
  CHECK(assign::capacities_from_observed(shuffled) == caps);
}

TEST_CASE("instance file round trip") {
  rng::Rng r(20240804);
  AssignmentInstance inst = random_instance(r, false);
  std::string path = "test_assign_roundtrip.csv";
  assign::write_instance(inst, path);
  AssignmentInstance back = assign::read_instance(path);
  CHECK(back.capacities == inst.capacities);
  REQUIRE(back.scores.size() == inst.scores.size());
  for (std::size_t i = 0; i < inst.scores.size(); ++i)
    for (std::size_t t = 0; t < inst.scores[i].size(); ++t)
      CHECK(back.scores[i][t] == inst.scores[i][t]);
  std::remove(path.c_str());
}

TEST_CASE("large instance solves quickly") {
  rng::Rng r(20240805);
  AssignmentInstance inst;
  int n = 1000, L = 43;
  inst.capacities.assign(static_cast<std::size_t>(L), 0);
  for (int i = 0; i < n; ++i)
    inst.capacities[static_cast<std::size_t>(r.uniform_int(L))]++;
  inst.scores.assign(static_cast<std::size_t>(n),
                     std::vector<double>(static_cast<std::size_t>(L), 0.0));
  for (auto& row : inst.scores)
    for (double& s : row) s = r.uniform();

  auto t0 = std::chrono::steady_clock::now();
  assign::SolveResult got = assign::solve(inst);
  auto t1 = std::chrono::steady_clock::now();
  double seconds = std::chrono::duration<double>(t1 - t0).count();
  check_feasible(inst, got.matching.assignment);
  CHECK(assign::certificate_ok(inst, got));
  CHECK(seconds < 1.0);
}
