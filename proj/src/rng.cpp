#include "curselab/rng.hpp"

#include <cmath>
#include <numbers>

#include "curselab/common.hpp"

namespace curselab::rng {

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  return mix64(mix64(master ^ fnv1a64(label)) ^ mix64(index));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

Rng Rng::child(std::string_view label, std::uint64_t index) const {
  return Rng(derive_seed(seed_, label, index));
}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) fail("Rng::uniform: empty interval");
  return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) fail("Rng::uniform_int: n must be positive");
  // Multiply-shift maps the full 64-bit draw onto [0, n). The bias is at
  // most n / 2^64, far below anything observable at our sample sizes.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(gen_()) * n) >> 64);
}

bool Rng::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) fail("Rng::bernoulli: p outside [0, 1]");
  return uniform() < p;
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  double a = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

int Rng::categorical(const std::vector<double>& weights) {
  if (weights.empty()) fail("Rng::categorical: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      fail("Rng::categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (total <= 0.0) fail("Rng::categorical: weights sum to zero");
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) fail("Rng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a + 1) * U^(1/a).
    double g = gamma(shape + 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    while (u <= 0.0) u = uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double Rng::beta(double a, double b) {
  if (a <= 0.0 || b <= 0.0) fail("Rng::beta: shapes must be positive");
  if (a == 1.0) {
    // F(x) = 1 - (1 - x)^b, so x = 1 - (1 - u)^(1/b).
    return 1.0 - std::pow(1.0 - uniform(), 1.0 / b);
  }
  if (b == 1.0) return std::pow(uniform(), 1.0 / a);
  double x = gamma(a);
  double y = gamma(b);
  return x / (x + y);
}

std::vector<int> Rng::permutation(int n) {
  if (n < 0) fail("Rng::permutation: negative n");
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(
        uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[j]);
  }
  return p;
}

}  // namespace curselab::rng
