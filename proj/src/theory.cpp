#include "curselab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "curselab/common.hpp"
#include "curselab/learners.hpp"
#include "curselab/rng.hpp"

namespace curselab::theory {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string param_tag(const PiecewiseEnvParams& p) {
  return "t0=" + format_double(p.t0) + " ymax=" + format_double(p.y_max);
}

}  // namespace

void PiecewiseEnvParams::validate() const {
  if (!(t0 > 0.0 && t0 < 1.0)) fail("piecewise params: t0 must lie in (0,1)");
  if (!(y_max > 0.0)) fail("piecewise params: y_max must be positive");
}

double piecewise_f_star(double t, const PiecewiseEnvParams& params) {
  params.validate();
  if (!(t >= 0.0 && t <= 1.0)) fail("piecewise_f_star: t must lie in [0,1]");
  if (t <= params.t0) return t * params.y_max / params.t0;
  return (1.0 - t) * params.y_max / (1.0 - params.t0);
}

double piecewise_ols_slope(const PiecewiseEnvParams& params) {
  params.validate();
  return (1.0 + params.t0) * params.y_max / 2.0;
}

namespace {

bool check_passes(CheckKind kind, double computed, double target,
                  double tolerance) {
  switch (kind) {
    case CheckKind::equals: return std::abs(computed - target) <= tolerance;
    case CheckKind::at_most: return computed <= target + tolerance;
    case CheckKind::at_least: return computed >= target - tolerance;
  }
  fail("check_passes: unknown kind");
}

CheckResult make_check(std::string name, CheckKind kind, double computed,
                       double target, double tolerance) {
  CheckResult c;
  c.name = std::move(name);
  c.kind = kind;
  c.computed = computed;
  c.target = target;
  c.tolerance = tolerance;
  c.pass = check_passes(kind, computed, target, tolerance);
  return c;
}

}  // namespace

CheckResult check_equals(std::string name, double computed, double target,
                         double tolerance) {
  return make_check(std::move(name), CheckKind::equals, computed, target,
                    tolerance);
}

CheckResult check_at_most(std::string name, double computed, double target,
                          double tolerance) {
  return make_check(std::move(name), CheckKind::at_most, computed, target,
                    tolerance);
}

CheckResult check_at_least(std::string name, double computed, double target,
                           double tolerance) {
  return make_check(std::move(name), CheckKind::at_least, computed, target,
                    tolerance);
}

bool TheoryReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void TheoryReport::append(CheckResult check) {
  checks.push_back(std::move(check));
}

void TheoryReport::extend(const TheoryReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

void write_report_csv(const TheoryReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("cannot open " + path + " for writing");
  os << "name,kind,computed,target,tolerance,pass\n";
  for (const auto& c : report.checks) {
    const char* kind = c.kind == CheckKind::equals    ? "equals"
                       : c.kind == CheckKind::at_most ? "at_most"
                                                      : "at_least";
    os << c.name << ',' << kind << ',' << format_double(c.computed) << ','
       << format_double(c.target) << ',' << format_double(c.tolerance) << ','
       << (c.pass ? "true" : "false") << '\n';
  }
  if (!os) fail("write failed for " + path);
}

namespace {

/// Through-origin least-squares slope of f* on t, from averaged moments of
/// (t * f*(t), t^2) over the supplied evaluation points.
template <typename NextT>
double slope_from_points(const PiecewiseEnvParams& params, std::int64_t count,
                         NextT next) {
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    double t = next(i);
    num += t * piecewise_f_star(t, params);
    den += t * t;
  }
  return num / den;
}

}  // namespace

TheoryReport verify_lemma1(const PiecewiseEnvParams& params,
                           std::int64_t grid_points, std::int64_t mc_draws,
                           std::uint64_t seed) {
  params.validate();
  if (grid_points < 1 || mc_draws < 1)
    fail("verify_lemma1: need positive grid and draw counts");
  double target = piecewise_ols_slope(params);

  double grid = slope_from_points(params, grid_points, [&](std::int64_t i) {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(grid_points);
  });
  rng::Rng rng(seed);
  double mc = slope_from_points(params, mc_draws,
                                [&](std::int64_t) { return rng.uniform(); });

  TheoryReport report;
  std::string tag = param_tag(params);
  report.append(
      check_equals("lemma1 grid slope " + tag, grid, target, 1e-3));
  report.append(check_equals("lemma1 mc slope " + tag, mc, target, 1e-3));
  report.append(
      check_equals("lemma1 grid vs mc " + tag, grid - mc, 0.0, 1e-3));
  return report;
}

TheoryReport verify_prop1(const PiecewiseEnvParams& params) {
  params.validate();
  double slope = piecewise_ols_slope(params);

  // The fitted line beta * t is maximized over a fine grid of [0, 1]; with a
  // positive slope the argmax is the right endpoint.
  auto argmax_t = [](double beta) {
    const int points = 100001;
    int best = 0;
    double best_value = beta * 0.0;
    for (int i = 1; i < points; ++i) {
      double t = static_cast<double>(i) / (points - 1);
      if (beta * t > best_value) {
        best_value = beta * t;
        best = i;
      }
    }
    return static_cast<double>(best) / (points - 1);
  };

  double t_hat = argmax_t(slope);
  double model_value = slope * t_hat;
  double true_value = piecewise_f_star(1.0, params);
  double bias = model_value - true_value;

  TheoryReport report;
  std::string tag = param_tag(params);
  report.append(check_equals("prop1 argmax " + tag, t_hat, 1.0, 0.0));
  report.append(check_equals("prop1 true outcome at argmax " + tag,
                             true_value, 0.0, 0.0));
  report.append(check_equals("prop1 bias " + tag, bias,
                             (1.0 + params.t0) * params.y_max / 2.0, 1e-3));
  if (params.t0 >= 0.5)
    report.append(check_at_least("prop1 bias floor " + tag, bias,
                                 params.y_max / 2.0));
  PiecewiseEnvParams scaled = params;
  scaled.y_max *= 7.0;
  report.append(check_equals("prop1 argmax scale invariance " + tag,
                             argmax_t(piecewise_ols_slope(scaled)), 1.0,
                             0.0));
  return report;
}

TheoryReport verify_prop2(const PiecewiseEnvParams& params,
                          std::int64_t grid_points) {
  params.validate();
  double eps = params.epsilon();
  if (eps > 0.5 + 1e-12)
    fail("verify_prop2: the bound needs epsilon = 1 - t0 <= 1/2");
  double slope = piecewise_ols_slope(params);
  double mse = 0.0;
  for (std::int64_t i = 0; i < grid_points; ++i) {
    double t =
        (static_cast<double>(i) + 0.5) / static_cast<double>(grid_points);
    double diff = slope * t - piecewise_f_star(t, params);
    mse += diff * diff;
  }
  mse /= static_cast<double>(grid_points);
  double y2 = params.y_max * params.y_max;
  double bound = 2.0 * eps * y2 + eps * eps * y2 / 3.0;
  TheoryReport report;
  report.append(check_at_most("prop2 mse bound eps=" + format_double(eps) +
                                  " ymax=" + format_double(params.y_max),
                              mse, bound));
  return report;
}

double RidgeExampleParams::alpha_value() const {
  if (alpha >= 0.0) return alpha;
  return std::pow(static_cast<double>(n), 0.25);
}

double RidgeExampleParams::lambda() const {
  return alpha_value() *
         std::sqrt(18.0 * std::log(8.0 / delta) / static_cast<double>(n));
}

double RidgeExampleParams::delta_gap() const { return 2.0 * (1.0 - p); }

void RidgeExampleParams::validate() const {
  if (!(b > 0.0)) fail("ridge params: b must be positive");
  if (!(p > 0.0 && p < 1.0)) fail("ridge params: p must lie in (0,1)");
  if (n < 4) fail("ridge params: n must be at least 4");
  if (!(sigma >= 0.0)) fail("ridge params: sigma must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0))
    fail("ridge params: delta must lie in (0,1)");
  if (alpha >= 0.0 && !(alpha > 0.0))
    fail("ridge params: explicit alpha must be positive");
}

std::vector<std::vector<double>> sigma_matrix(double p) {
  if (!(p > 0.0 && p < 1.0)) fail("sigma_matrix: p must lie in (0,1)");
  return {{p, 0.0, 0.0}, {0.0, 1.0, p}, {0.0, p, p}};
}

std::vector<double> ridge_population_target(const RidgeExampleParams& params) {
  params.validate();
  double shrunk = params.b / (2.0 + params.lambda());
  return {0.0, shrunk, shrunk};
}

double policy_value(const std::vector<double>& beta_policy,
                    const std::vector<double>& beta_eval) {
  if (beta_policy.size() != 3 || beta_eval.size() != 3)
    fail("policy_value: coefficient vectors must have length 3");
  double b1 = beta_policy[0], b3 = beta_policy[2];
  // E[f(x, pi(x))] = e1 * P(treated) + e3 * E[x; treated] (the linear x term
  // integrates to zero under the standard normal).
  if (b3 == 0.0) return b1 > 0.0 ? beta_eval[0] : 0.0;
  double threshold = -b1 / b3;
  if (b3 > 0.0)
    return beta_eval[0] * normal_cdf(-threshold) +
           beta_eval[2] * normal_pdf(threshold);
  return beta_eval[0] * normal_cdf(threshold) -
         beta_eval[2] * normal_pdf(threshold);
}

namespace {

double excess_mse(const std::vector<double>& beta,
                  const std::vector<double>& truth,
                  const std::vector<std::vector<double>>& sigma) {
  double total = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      total += (beta[static_cast<std::size_t>(i)] -
                truth[static_cast<std::size_t>(i)]) *
               sigma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               (beta[static_cast<std::size_t>(j)] -
                truth[static_cast<std::size_t>(j)]);
  return total;
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    total += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(total);
}

/// One synthetic dataset of the ridge example, streamed into second moments
/// and solved in closed form.
std::vector<double> ridge_fit_stream(const RidgeExampleParams& params,
                                     double lambda, rng::Rng& rng) {
  double s_t = 0.0, s_tx = 0.0, s_xx = 0.0, s_txx = 0.0;
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;
  for (std::int64_t i = 0; i < params.n; ++i) {
    double x = rng.normal();
    bool treated = rng.bernoulli(params.p);
    double y = params.b * x + params.sigma * rng.normal();
    s_xx += x * x;
    v1 += x * y;
    if (treated) {
      s_t += 1.0;
      s_tx += x;
      s_txx += x * x;
      v0 += y;
      v2 += x * y;
    }
  }
  double n = static_cast<double>(params.n);
  std::vector<std::vector<double>> sig = {{s_t / n, s_tx / n, s_tx / n},
                                          {s_tx / n, s_xx / n, s_txx / n},
                                          {s_tx / n, s_txx / n, s_txx / n}};
  std::vector<double> xty = {v0 / n, v1 / n, v2 / n};
  return learners::ridge_from_moments(sig, xty, lambda);
}

struct RepMetrics {
  double excess = 0.0;
  double stability = 0.0;
  double optimism_mc = 0.0;
  double optimism_cf = 0.0;
  double target_dist = 0.0;
};

struct Prop3Bounds {
  double accuracy = 0.0;
  double stability = 0.0;
  double curse_slack = 0.0;  // the R term
};

Prop3Bounds prop3_bounds(const RidgeExampleParams& params) {
  double a = params.alpha_value();
  double logd = std::log(8.0 / params.delta);
  double n = static_cast<double>(params.n);
  Prop3Bounds bounds;
  bounds.accuracy = 6.0 * params.b * params.b * a *
                        std::sqrt(18.0 * logd / n) +
                    72.0 * logd / n;
  bounds.stability =
      8.0 * params.b / a + 4.0 * std::sqrt(logd / (a * std::sqrt(n)));
  bounds.curse_slack = 24.0 * params.b / a +
                       12.0 * std::sqrt(logd / (a * std::sqrt(n))) +
                       128.0 / (a * a) +
                       32.0 * logd / (a * params.b * params.b * std::sqrt(n));
  return bounds;
}

void require_minimum_sample(const RidgeExampleParams& params) {
  double lhs = std::pow(static_cast<double>(params.n), 0.25);
  double rhs = 4.0 * std::sqrt(std::log(8.0 / params.delta)) / params.b;
  if (lhs < rhs)
    fail("minimum-sample condition violated: need n^(1/4) >= "
         "4*sqrt(log(8/delta))/b");
}

/// Mean closed-form optimism of independent refit pairs; used for the
/// convergence-in-n probe.
double mean_optimism_closed_form(const RidgeExampleParams& params, int reps,
                                 std::uint64_t seed, int threads) {
  double lambda = params.lambda();
  std::vector<double> truth = {0.0, params.b, 0.0};
  std::vector<double> values(static_cast<std::size_t>(reps));
  parallel_for(reps, threads, [&](int r) {
    rng::Rng rng =
        rng::Rng(seed).child("conv-rep", static_cast<std::uint64_t>(r));
    std::vector<double> fit = ridge_fit_stream(params, lambda, rng);
    std::vector<double> refit = ridge_fit_stream(params, lambda, rng);
    values[static_cast<std::size_t>(r)] =
        policy_value(fit, refit) - policy_value(fit, truth);
  });
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(reps);
}

}  // namespace

TheoryReport verify_prop3(const RidgeExampleParams& params, int reps,
                          std::uint64_t seed, int threads) {
  params.validate();
  require_minimum_sample(params);
  if (reps < 2) fail("verify_prop3: need at least 2 reps");

  double lambda = params.lambda();
  Prop3Bounds bounds = prop3_bounds(params);
  std::vector<double> truth = {0.0, params.b, 0.0};
  std::vector<double> population = ridge_population_target(params);
  auto sigma = sigma_matrix(params.p);
  double asymptote = params.b / (2.0 * std::sqrt(2.0 * kPi));

  constexpr std::int64_t kPolicyDraws = 1000000;
  std::vector<RepMetrics> metrics(static_cast<std::size_t>(reps));
  double identity_gap = 0.0, identity_se = 0.0;
  double agreement_gap = 0.0, agreement_se = 0.0;

  parallel_for(reps, threads, [&](int r) {
    rng::Rng rep_rng =
        rng::Rng(seed).child("rep", static_cast<std::uint64_t>(r));
    std::vector<double> fit = ridge_fit_stream(params, lambda, rep_rng);
    std::vector<double> refit = ridge_fit_stream(params, lambda, rep_rng);

    RepMetrics& m = metrics[static_cast<std::size_t>(r)];
    m.excess = excess_mse(fit, truth, sigma);
    m.stability = l2_distance(fit, refit);
    m.target_dist = l2_distance(fit, population);
    m.optimism_cf = policy_value(fit, refit) - policy_value(fit, truth);

    // Raw-definition optimism: Monte Carlo over x of the evaluation gap at
    // the fitted policy. The linear beta_2 x term cancels inside the
    // difference, and the same draws serve both evaluations.
    rng::Rng mc_rng = rep_rng.child("policy-mc");
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t i = 0; i < kPolicyDraws; ++i) {
      double x = mc_rng.normal();
      bool act = fit[0] + fit[2] * x > 0.0;
      double gap = (refit[1] - truth[1]) * x;
      if (act) gap += refit[0] + refit[2] * x;
      sum += gap;
      sum_sq += gap * gap;
    }
    double mean = sum / static_cast<double>(kPolicyDraws);
    m.optimism_mc = mean;

    if (r == 0) {
      double var = (sum_sq / static_cast<double>(kPolicyDraws) - mean * mean) /
                   static_cast<double>(kPolicyDraws);
      agreement_gap = std::abs(mean - m.optimism_cf);
      agreement_se = std::sqrt(std::max(var, 0.0));

      // Cross-check the quadratic-form excess MSE against its raw
      // definition E[(f^beta - f^{beta*})^2] over fresh (x, t) draws.
      rng::Rng id_rng = rep_rng.child("mse-mc");
      constexpr std::int64_t kIdentityDraws = 200000;
      double s = 0.0, s2 = 0.0;
      for (std::int64_t i = 0; i < kIdentityDraws; ++i) {
        double x = id_rng.normal();
        double t = id_rng.bernoulli(params.p) ? 1.0 : 0.0;
        double diff = (fit[0] - truth[0]) * t + (fit[1] - truth[1]) * x +
                      (fit[2] - truth[2]) * t * x;
        s += diff * diff;
        s2 += diff * diff * diff * diff;
      }
      double mc = s / static_cast<double>(kIdentityDraws);
      double mc_var = (s2 / static_cast<double>(kIdentityDraws) - mc * mc) /
                      static_cast<double>(kIdentityDraws);
      identity_gap = std::abs(mc - m.excess);
      identity_se = std::sqrt(std::max(mc_var, 0.0));
    }
  });

  double coverage_target = 1.0 - 2.0 * params.delta;
  double acc_cover = 0.0, stab_cover = 0.0, floor_cover = 0.0;
  double optimism_sum = 0.0, optimism_cf_sum = 0.0, dist_sum = 0.0;
  for (const auto& m : metrics) {
    acc_cover += m.excess <= bounds.accuracy ? 1.0 : 0.0;
    stab_cover += m.stability <= bounds.stability ? 1.0 : 0.0;
    floor_cover += m.optimism_mc >= asymptote - bounds.curse_slack ? 1.0 : 0.0;
    optimism_sum += m.optimism_mc;
    optimism_cf_sum += m.optimism_cf;
    dist_sum += m.target_dist;
  }
  double n_reps = static_cast<double>(reps);

  TheoryReport report;
  report.append(check_at_least("prop3 accuracy coverage",
                               acc_cover / n_reps, coverage_target));
  report.append(check_at_least("prop3 stability coverage",
                               stab_cover / n_reps, coverage_target));
  report.append(check_at_least("prop3 curse floor coverage",
                               floor_cover / n_reps, coverage_target));
  report.append(check_equals("prop3 optimism mean", optimism_sum / n_reps,
                             asymptote, 0.05 * params.b));
  report.append(check_at_most("prop3 estimate vs population target",
                              dist_sum / n_reps, 0.05));
  report.append(check_at_most("prop3 optimism mc vs closed form",
                              agreement_gap, 3.0 * agreement_se));
  report.append(check_at_most("prop3 excess mse identity", identity_gap,
                              3.0 * identity_se));

  // Optimism approaches b / (2 sqrt(2 pi)) as n grows (alpha = n^(1/4)):
  // the gap at n must be smaller than the gap at n / 10.
  RidgeExampleParams big = params;
  big.alpha = -1.0;
  RidgeExampleParams small = big;
  small.n = std::max<std::int64_t>(params.n / 10, 100);
  int conv_reps = std::max(10, reps / 2);
  double gap_big = std::abs(
      mean_optimism_closed_form(big, conv_reps,
                                rng::derive_seed(seed, "conv-big", 0),
                                threads) -
      asymptote);
  double gap_small = std::abs(
      mean_optimism_closed_form(small, conv_reps,
                                rng::derive_seed(seed, "conv-small", 0),
                                threads) -
      asymptote);
  report.append(
      check_at_most("prop3 optimism convergence", gap_big, gap_small));
  return report;
}

TheoryReport verify_lemma_a(const RidgeExampleParams& params, int trials,
                            std::int64_t draws, std::uint64_t seed) {
  params.validate();
  if (trials < 1 || draws < 2) fail("verify_lemma_a: bad trial or draw count");
  auto sigma = sigma_matrix(params.p);
  std::vector<double> truth = {0.0, params.b, 0.0};
  rng::Rng root(seed);

  double max_z = 0.0;
  for (int k = 0; k < trials; ++k) {
    rng::Rng rng = root.child("trial", static_cast<std::uint64_t>(k));
    std::vector<double> beta = truth;
    for (auto& c : beta) c += rng.normal();
    double closed = excess_mse(beta, truth, sigma);

    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = 0; i < draws; ++i) {
      double x = rng.normal();
      double t = rng.bernoulli(params.p) ? 1.0 : 0.0;
      double diff = (beta[0] - truth[0]) * t + (beta[1] - truth[1]) * x +
                    (beta[2] - truth[2]) * t * x;
      s += diff * diff;
      s2 += diff * diff * diff * diff;
    }
    double mc = s / static_cast<double>(draws);
    double var =
        (s2 / static_cast<double>(draws) - mc * mc) / static_cast<double>(draws);
    double se = std::sqrt(std::max(var, 1e-300));
    max_z = std::max(max_z, std::abs(mc - closed) / se);
  }
  TheoryReport report;
  report.append(check_at_most("lemma-a identity max z over " +
                                  std::to_string(trials) + " trials",
                              max_z, 3.0));
  return report;
}

TheoryReport verify_policy_sensitivity(const RidgeExampleParams& params,
                                       int trials, std::int64_t draws,
                                       std::uint64_t seed) {
  params.validate();
  if (trials < 1 || draws < 1)
    fail("verify_policy_sensitivity: bad trial or draw count");
  rng::Rng root(seed);
  rng::Rng pool_rng = root.child("pool");
  std::vector<double> pool(static_cast<std::size_t>(draws));
  for (auto& x : pool) x = pool_rng.normal();

  auto mc_policy_value = [&](const std::vector<double>& policy,
                             const std::vector<double>& eval) {
    double total = 0.0;
    for (double x : pool) {
      double v = eval[1] * x;
      if (policy[0] + policy[2] * x > 0.0) v += eval[0] + eval[2] * x;
      total += v;
    }
    return total / static_cast<double>(draws);
  };

  double max_ratio = 0.0;
  for (int k = 0; k < trials; ++k) {
    rng::Rng rng = root.child("trial", static_cast<std::uint64_t>(k));
    std::vector<double> policy(3), eval(3), shifted(3);
    for (auto& c : policy) c = rng.normal();
    for (auto& c : eval) c = rng.normal();
    double eta = rng.uniform(0.01, 0.5);
    for (int j = 0; j < 3; ++j)
      shifted[static_cast<std::size_t>(j)] =
          eval[static_cast<std::size_t>(j)] + eta * rng.uniform(-1.0, 1.0);
    double gap =
        std::abs(mc_policy_value(policy, eval) - mc_policy_value(policy, shifted));
    max_ratio = std::max(max_ratio, gap / eta);
  }
  TheoryReport report;
  report.append(check_at_most("policy sensitivity max |dP|/eta over " +
                                  std::to_string(trials) + " trials",
                              max_ratio, 3.0));
  return report;
}

TheoryReport run_all(std::uint64_t seed, int threads) {
  TheoryReport report;
  const PiecewiseEnvParams piecewise_points[] = {
      {0.5, 2.0}, {0.9, 1.0}, {0.99, 1.0}};
  int idx = 0;
  for (const auto& p : piecewise_points) {
    report.extend(verify_lemma1(p, 1000000, 4000000,
                                rng::derive_seed(seed, "lemma1",
                                                 static_cast<std::uint64_t>(idx))));
    report.extend(verify_prop1(p));
    ++idx;
  }
  for (double eps : {0.01, 0.1, 0.5})
    report.extend(verify_prop2({1.0 - eps, 1.0}));

  RidgeExampleParams ridge;  // reference point: b=1, p=0.999, n=1e5
  report.extend(verify_prop3(ridge, 100, rng::derive_seed(seed, "prop3", 0),
                             threads));
  report.extend(
      verify_lemma_a(ridge, 100, 200000, rng::derive_seed(seed, "lemma-a", 0)));
  report.extend(verify_policy_sensitivity(
      ridge, 100, 200000, rng::derive_seed(seed, "sensitivity", 0)));
  return report;
}

}  // namespace curselab::theory
