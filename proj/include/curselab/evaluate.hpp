#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "curselab/assign.hpp"
#include "curselab/envgen.hpp"
#include "curselab/learners.hpp"
#include "curselab/tabular.hpp"

namespace curselab::evaluate {

enum class Method { model_based, bootstrap_model_based, ipw, oracle };

std::string_view method_name(Method method);

/// One policy-value estimate. count is the estimated number of employed
/// refugees under the matching; rate = count / N; pct_change is relative to
/// the observed employment rate of the same test set.
struct PolicyEstimate {
  Method method = Method::model_based;
  double employment_count = 0.0;
  double employment_rate = 0.0;
  double pct_change_vs_observed = 0.0;
  std::uint64_t model_digest = 0;
  int bootstrap_index = -1;  // -1 when not a bootstrap draw
};

/// Assembles an estimate from a raw count. observed_rate must be positive
/// (the percent-change normalization divides by it).
PolicyEstimate make_estimate(Method method, double count, int n,
                             double observed_rate,
                             std::uint64_t model_digest = 0,
                             int bootstrap_index = -1);

/// Plug-in estimate: the count is the sum of the model's own predictions
/// over the matched pairs.
PolicyEstimate model_based(const learners::OutcomeModel& model,
                           const assign::Matching& matching,
                           const std::vector<tabular::RefugeeRecord>& records,
                           double observed_rate);

/// Same, from a precomputed score matrix (the one the solver consumed).
PolicyEstimate model_based_from_scores(
    const std::vector<std::vector<double>>& scores,
    const assign::Matching& matching, double observed_rate,
    std::uint64_t model_digest = 0);

struct BootstrapConfig {
  learners::TrainConfig train;
  int replicates = 250;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Test hook: skip resampling, so every replicate refits the original
  /// training sample.
  bool identity_resample = false;
};

/// Refits the family on B bootstrap resamples of the training sample (same
/// n, drawn with replacement) and scores the FIXED matching with each refit.
/// Results are ordered by bootstrap index. A failed refit propagates as an
/// error naming the index.
std::vector<PolicyEstimate> bootstrap_model_based(
    const tabular::Dataset& train, const assign::Matching& matching,
    const std::vector<tabular::RefugeeRecord>& test_records,
    const BootstrapConfig& config, double observed_rate);

/// Importance-weighted estimate: refugees whose proposed location equals
/// their logged location contribute Y/p, everyone else 0. The stored
/// propensity of every logged assignment must be strictly positive.
/// self_normalized divides by the sum of the weights instead of N before
/// scaling back to a count; it is an off-by-default exploration variant,
/// not part of the reference estimator set.
PolicyEstimate ipw(const assign::Matching& matching,
                   const tabular::Dataset& test, double observed_rate,
                   bool self_normalized = false);

/// Ground-truth value of the matching (delegates to envgen::true_value).
PolicyEstimate oracle(const envgen::CausalModel& model,
                      const std::vector<tabular::RefugeeRecord>& records,
                      const assign::Matching& matching, double observed_rate);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> curve;  // threshold descending, (0,0) to (1,1)
  double auc = 0.0;
};

/// AUC as the tie-averaged rank statistic, with the full threshold curve.
/// Both classes must be present.
RocResult roc_auc(const std::vector<double>& scores,
                  const std::vector<int>& labels);

/// Scores every row at its logged location and ranks against the observed
/// outcomes.
RocResult roc_auc(const learners::OutcomeModel& model,
                  const tabular::Dataset& data);

struct CalibrationBin {
  double lo = 0.0;  // bin edges on the prediction axis
  double hi = 0.0;
  double mean_predicted = 0.0;
  double observed_rate = 0.0;
  int count = 0;
};

/// Equal-width probability bins over [0, 1]; empty bins are omitted.
/// Scores must be probabilities. bins >= 2.
std::vector<CalibrationBin> calibration_curve(const std::vector<double>& scores,
                                              const std::vector<int>& labels,
                                              int bins);

std::vector<CalibrationBin> calibration_curve(
    const learners::OutcomeModel& model, const tabular::Dataset& data,
    int bins);

struct Summary {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1 denominator)
  double min = 0.0;
  double max = 0.0;
};

Summary summarize(const std::vector<double>& values);

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

/// Equal-width bins spanning [min, max] of the values; a degenerate sample
/// (min == max) collapses to one bin. The top edge is inclusive.
std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    int bins);

}  // namespace curselab::evaluate
