#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace curselab {

/// Error type thrown on contract violations (bad configs, malformed inputs,
/// infeasible instances). Carries a plain human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void fail(const std::string& message);

/// FNV-1a 64-bit hash of a byte string. Used for label hashing in seed
/// derivation and for content digests written to run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

/// SplitMix64 finalizer; a cheap bijective mixer with good avalanche.
std::uint64_t mix64(std::uint64_t x);

/// Shortest round-trip decimal formatting for doubles. Every double written
/// to a CSV goes through this so that output files are byte-identical across
/// runs and thread counts.
std::string format_double(double value);

/// Parses a double, rejecting trailing garbage.
double parse_double(std::string_view text);
long parse_long(std::string_view text);

/// Splits one CSV line on commas. No quoting support: the formats used here
/// never emit commas inside fields.
std::vector<std::string> split_csv_line(const std::string& line);

std::string join_csv(const std::vector<std::string>& fields);

/// Runs fn(i) for i in [0, n) across `threads` workers. Work items are
/// claimed from a shared atomic counter; callers must write results into
/// index-addressed slots so output order is independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// Logistic function, stable on both tails.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// Inverse of sigmoid; the argument must lie strictly inside (0, 1).
inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double clamp01(double p, double floor_eps) {
  if (p < floor_eps) return floor_eps;
  if (p > 1.0 - floor_eps) return 1.0 - floor_eps;
  return p;
}

}  // namespace curselab
