#pragma once

#include <string>
#include <vector>

namespace curselab::tabular {
struct Dataset;
}

namespace curselab::assign {

/// Capacity-constrained assignment problem: maximize the sum of
/// scores[i][assignment[i]] subject to per-location capacities.
struct AssignmentInstance {
  std::vector<std::vector<double>> scores;  // N x L
  std::vector<int> capacities;              // length L

  int num_refugees() const { return static_cast<int>(scores.size()); }
  int num_locations() const { return static_cast<int>(capacities.size()); }
  /// Throws on ragged or non-finite scores, negative capacities, or
  /// total capacity below N.
  void validate() const;
};

struct Matching {
  std::vector<int> assignment;  // length N, location index per refugee
};

struct SolveResult {
  Matching matching;
  double objective = 0.0;
  /// Final location potentials of the successive-shortest-path solve. Spare
  /// locations sit at 0 and all potentials are <= 0; together with the
  /// matching they form an optimality certificate (see certificate_ok).
  std::vector<double> potentials;
};

/// Exact maximizer via successive shortest augmenting paths with potentials
/// (the LP relaxation of the transportation polytope is integral). Among all
/// optimal matchings, returns the lexicographically smallest assignment
/// vector; ties in scores are therefore resolved reproducibly.
SolveResult solve(const AssignmentInstance& instance);

/// Complementary-slackness check of a solve result: every refugee's assigned
/// arc attains the minimum reduced cost of its row, and every location with
/// spare capacity has zero potential. A true result certifies optimality.
bool certificate_ok(const AssignmentInstance& instance, const SolveResult& result,
                    double tolerance = 1e-7);

/// c_t = number of rows of the test set observed at location t. The total
/// equals N, so every feasible matching runs at full capacity.
std::vector<int> capacities_from_observed(const tabular::Dataset& test);

/// Debug dump/load: first line capacities, then one score row per line.
void write_instance(const AssignmentInstance& instance, const std::string& path);
AssignmentInstance read_instance(const std::string& path);

}  // namespace curselab::assign
