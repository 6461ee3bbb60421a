#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace curselab::rng {

/// Derives a child seed from a master seed, a purpose label, and an index.
/// The tree is: child = mix(mix(master ^ fnv1a(label)) ^ mix(index)). Labels
/// keep sibling streams ("train", "test", "boot", ...) independent; indices
/// address replicates within a stream. Purely arithmetic, so the whole seed
/// tree is reproducible from the master seed alone.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index);

/// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and implements every variate transform by hand,
/// because std::*_distribution output is implementation-defined and would
/// break run-to-run reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Child stream addressed by (label, index); independent of draws made so
  /// far on this stream.
  Rng child(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer on [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p);

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached, so draws come in deterministic pairs.
  double normal();
  double normal(double mean, double sd);

  /// Index draw from an unnormalized nonnegative weight vector.
  int categorical(const std::vector<double>& weights);

  /// Beta(a, b) variate. Shape a == 1 or b == 1 uses the closed-form inverse
  /// CDF; the general case uses two Marsaglia-Tsang gamma draws.
  double beta(double a, double b);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n);

  /// Gamma(shape, 1) via Marsaglia-Tsang (boosted for shape < 1).
  double gamma(double shape);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace curselab::rng
