#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace curselab::theory {

/// Tent-shaped noiseless outcome curve: rises linearly from 0 at t=0 to
/// y_max at t=t0, then falls linearly back to 0 at t=1.
struct PiecewiseEnvParams {
  double t0 = 0.9;
  double y_max = 1.0;

  double epsilon() const { return 1.0 - t0; }
  void validate() const;  // 0 < t0 < 1, y_max > 0
};

double piecewise_f_star(double t, const PiecewiseEnvParams& params);

/// Closed-form slope of the through-origin least-squares fit of f* on t
/// over uniform t: (1 + t0) * y_max / 2.
double piecewise_ols_slope(const PiecewiseEnvParams& params);

enum class CheckKind { equals, at_most, at_least };

/// One numerical verification: a computed quantity against its closed-form
/// target. equals passes iff |computed - target| <= tolerance; at_most iff
/// computed <= target + tolerance; at_least iff computed >= target -
/// tolerance.
struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::equals;
  double computed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

CheckResult check_equals(std::string name, double computed, double target,
                         double tolerance);
CheckResult check_at_most(std::string name, double computed, double target,
                          double tolerance = 0.0);
CheckResult check_at_least(std::string name, double computed, double target,
                           double tolerance = 0.0);

struct TheoryReport {
  std::vector<CheckResult> checks;

  bool all_pass() const;
  void append(CheckResult check);
  void extend(const TheoryReport& other);
};

/// CSV columns: name,kind,computed,target,tolerance,pass.
void write_report_csv(const TheoryReport& report, const std::string& path);

/// Least-squares slope recovered two independent ways (composite-midpoint
/// grid and Monte Carlo draws), both compared against the closed form, plus
/// the two integrators against each other.
TheoryReport verify_lemma1(const PiecewiseEnvParams& params,
                           std::int64_t grid_points = 1000000,
                           std::int64_t mc_draws = 4000000,
                           std::uint64_t seed = 7);

/// The untreated-region argmax: t_hat = 1, the model-based value at t_hat,
/// the zero true outcome there, and the resulting optimism bias
/// (1 + t0) * y_max / 2 (at least y_max / 2 whenever t0 >= 1/2).
TheoryReport verify_prop1(const PiecewiseEnvParams& params);

/// Numerically integrated MSE of the linear fit against the tent curve,
/// bounded by 2 * eps * y_max^2 + eps^2 * y_max^2 / 3 for eps <= 1/2.
TheoryReport verify_prop2(const PiecewiseEnvParams& params,
                          std::int64_t grid_points = 1000000);

/// The three-feature ridge example: phi(x, t) = [t, x, tx] with x standard
/// normal, t Bernoulli(p), y = b x + sigma * noise, truth beta* = [0, b, 0].
struct RidgeExampleParams {
  double b = 1.0;
  double p = 0.999;
  std::int64_t n = 100000;
  double sigma = 1.0;
  double delta = 0.05;
  /// Ridge scale: lambda = alpha * sqrt(18 log(8/delta) / n). Negative
  /// means alpha = n^(1/4).
  double alpha = -1.0;

  double alpha_value() const;
  double lambda() const;
  /// The treatment-rarity gap implied by p: 2 (1 - p).
  double delta_gap() const;
  void validate() const;
};

/// Population second-moment matrix of phi: [[p,0,0],[0,1,p],[0,p,p]].
std::vector<std::vector<double>> sigma_matrix(double p);

/// Where ridge converges as n grows: [0, b/(2+lambda), b/(2+lambda)].
std::vector<double> ridge_population_target(const RidgeExampleParams& params);

/// Exact policy value P(beta; beta_eval) = E_x[f^{beta_eval}(x, pi(x))]
/// where pi(x) = 1{beta_1 + beta_3 x > 0} and x is standard normal.
double policy_value(const std::vector<double>& beta_policy,
                    const std::vector<double>& beta_eval);

/// Monte Carlo verification of the ridge proposition over independent
/// synthetic datasets: accuracy (excess MSE below its bound), stability
/// (distance between independent refits below its bound), the winner's-curse
/// floor, the Monte Carlo optimism mean against b / (2 sqrt(2 pi)), the
/// fitted coefficients against the population target, cross-checks of the
/// closed forms against raw-definition Monte Carlo, and optimism convergence
/// in n. Refuses to run when the minimum-sample hypothesis
/// n^(1/4) >= 4 sqrt(log(8/delta)) / b fails.
TheoryReport verify_prop3(const RidgeExampleParams& params, int reps = 100,
                          std::uint64_t seed = 11, int threads = 1);

/// Excess-MSE identity: for random coefficient vectors beta, Monte Carlo
/// E[(f^beta - f^{beta*})^2] matches (beta - beta*)' Sigma (beta - beta*)
/// within 3 standard errors on every trial.
TheoryReport verify_lemma_a(const RidgeExampleParams& params,
                            int trials = 100, std::int64_t draws = 200000,
                            std::uint64_t seed = 13);

/// Policy-value sensitivity: perturbing the evaluation coefficients by eta
/// (sup norm) moves P by at most 3 eta, checked over random perturbations on
/// a shared draw pool.
TheoryReport verify_policy_sensitivity(const RidgeExampleParams& params,
                                       int trials = 100,
                                       std::int64_t draws = 200000,
                                       std::uint64_t seed = 17);

/// Everything above at the reference parameter points.
TheoryReport run_all(std::uint64_t seed, int threads);

}  // namespace curselab::theory
