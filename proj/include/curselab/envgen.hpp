#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curselab/assign.hpp"
#include "curselab/tabular.hpp"
#include "curselab/trees.hpp"

namespace curselab::envgen {

/// One uniform segment of a binned numeric marginal: the covariate is drawn
/// by first picking a bin by probability, then uniformly within it.
struct NumericBin {
  double lo = 0.0;
  double hi = 0.0;
  double prob = 0.0;
};

/// A covariate descriptor together with its sampling marginal.
struct CovariateSpec {
  tabular::Covariate covariate;
  std::vector<double> category_probs;  // categorical: one weight per category
  std::vector<NumericBin> bins;        // numeric: mixture of uniform bins

  void validate() const;
};

struct RfParams {
  int trees = 200;
  int max_depth = 8;
  double min_leaf = 25.0;
};

/// Knobs of the covariate-effect construction: a random-coefficient logit
/// labels a fitting sample, and a random forest regression on covariates
/// only smooths those labels into f_X.
struct FxPipeline {
  double coef_scale = 1.0;   // sd of the random logit coefficients
  double intercept = -2.0;   // base log-odds of the labeling logit
  int n_fit = 40000;         // size of the internal fitting sample
  RfParams rf;
};

struct EnvironmentConfig {
  std::vector<CovariateSpec> covariates;
  int num_locations = 43;
  /// Location assignment probabilities; empty means
  /// default_location_probs(num_locations).
  std::vector<double> location_probs;
  double beta_a = 1.0;  // location-effect Beta shape
  double beta_b = 2.0;
  /// Logit-scale coefficient forced onto the case_restriction=free
  /// indicator when that covariate exists.
  double free_case_boost = 1.0;
  FxPipeline fx;

  void validate() const;
  tabular::CovariateSchema schema() const;
  /// Resolved copy: location_probs filled in when empty.
  EnvironmentConfig resolved() const;
  /// Canonical text rendering of every field, used for digests and
  /// sidecar files.
  std::string describe() const;
};

/// The default environment: the standard eight-covariate schema (age,
/// gender, education, english, case restriction, origin, arrival year,
/// arrival month) with its published marginals and 43 locations.
EnvironmentConfig default_environment();

/// Ascending geometric profile q_t proportional to r^t with r set so that
/// max/min is about 20, normalized to sum to 1.
std::vector<double> default_location_probs(int num_locations);

/// Hash of the full configuration and the environment seed.
std::uint64_t environment_digest(const EnvironmentConfig& config,
                                 std::uint64_t seed);

enum class Restriction { any, free_only };

/// Draws n covariate rows independently from the configured marginals.
/// free_only forces case_restriction to "free" after sampling, leaving the
/// other covariates' draws unchanged.
std::vector<tabular::RefugeeRecord> sample_covariates(
    const EnvironmentConfig& config, int n, std::uint64_t seed,
    Restriction restriction);

/// Ground truth of one environment: f(x, t) = 0.5 f_X(x) + 0.5 f_L(t).
/// Additive by construction, so location contrasts do not depend on x and
/// no full-capacity matching can beat another in expectation.
class CausalModel {
 public:
  CausalModel() = default;
  /// Ground truth with a constant covariate effect (tests and examples).
  static CausalModel constant(double fx_value,
                              std::vector<double> location_effects);

  double f_x(const tabular::RefugeeRecord& record) const;
  double f_location(int location) const;
  double value(const tabular::RefugeeRecord& record, int location) const;
  /// f_x for a batch of records (one encoding pass per record).
  std::vector<double> f_x_batch(
      const std::vector<tabular::RefugeeRecord>& records,
      int threads = 1) const;

  int num_locations() const { return static_cast<int>(f_loc_.size()); }
  const std::vector<double>& location_effects() const { return f_loc_; }
  /// True when the fitted covariate effect came out constant over its
  /// fitting sample (permitted, but worth surfacing in diagnostics).
  bool degenerate() const { return degenerate_; }
  /// Seed build_causal_model was called with (0 for synthetic models).
  std::uint64_t build_seed() const { return build_seed_; }

 private:
  friend CausalModel build_causal_model(const EnvironmentConfig&,
                                        std::uint64_t);
  tabular::FeatureMap map_;  // covariates_only
  trees::Forest forest_;
  std::vector<double> f_loc_;
  bool fx_constant_ = false;
  double fx_value_ = 0.0;
  bool degenerate_ = false;
  std::uint64_t build_seed_ = 0;
};

/// Builds the environment's ground truth from a seed: (1) sample an internal
/// fitting set of records and locations, (2) label it with a
/// random-coefficient logit over covariate and location features (the
/// case_restriction=free coefficient is pinned to free_case_boost), (3) fit
/// a random forest regression of the labels on covariates only and clip its
/// predictions into [0.02, 0.98] to get f_X, (4) draw f_L i.i.d.
/// Beta(beta_a, beta_b) from a stream independent of steps 1-3.
CausalModel build_causal_model(const EnvironmentConfig& config,
                               std::uint64_t seed);

struct HistoricalSample {
  tabular::Dataset dataset;
  std::uint64_t env_seed = 0;
  std::uint64_t sample_seed = 0;
};

/// Draws a historical dataset: covariates from the marginals, locations
/// i.i.d. from location_probs, outcomes Bernoulli(f(X, T)). Every record's
/// stored propensity row equals location_probs exactly.
HistoricalSample sample_history(const CausalModel& model,
                                const EnvironmentConfig& config, int n,
                                std::uint64_t seed, Restriction restriction);

/// Expected employment count of a matching under the ground truth:
/// sum over i of f(X_i, matching[i]).
double true_value(const CausalModel& model,
                  const std::vector<tabular::RefugeeRecord>& records,
                  const assign::Matching& matching);

}  // namespace curselab::envgen
