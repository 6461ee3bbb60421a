#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curselab/envgen.hpp"
#include "curselab/evaluate.hpp"
#include "curselab/learners.hpp"

namespace curselab::expt {

/// One model family participating in a run: a display name (also the config
/// section suffix and the diagnostics file tag) plus its hyperparameters.
struct LearnerEntry {
  std::string name;
  learners::TrainConfig train;
};

/// Full description of a simulation run. Defaults are the full-scale
/// protocol sizes; desk_preset() gives the reduced configuration the fast
/// checks use.
struct RunConfig {
  envgen::EnvironmentConfig env;
  int n_train = 33000;
  int n_test = 1000;
  int replications = 250;
  int bootstraps = 250;
  std::vector<LearnerEntry> learners;
  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  int threads = 1;
  int histogram_bins = 20;
  /// Redraw the training sample and refit for every replication instead of
  /// fitting once per family (the stricter protocol reading).
  bool refit_per_rep = false;
  /// Size of the held-out labeled sample used for ROC and calibration
  /// diagnostics.
  int diag_n = 20000;

  void validate() const;
};

/// The three standard families (lasso-logit, honest-rf, gbm) at their
/// default hyperparameters.
std::vector<LearnerEntry> default_learners();

/// Reduced sizes for interactive work and the acceptance checks:
/// 8,000 train / 500 test / 50 replications / 50 bootstraps.
RunConfig desk_preset();

/// Full-scale sizes: 33,000 / 1,000 / 250 / 250.
RunConfig full_preset();

/// Parses the structured key-value run configuration:
///
///   [env]               scalar environment knobs (num_locations, beta_a,
///                       beta_b, free_case_boost, coef_scale, fx_intercept,
///                       fx_n_fit, fx_trees, fx_max_depth, fx_min_leaf,
///                       location_probs as a comma list)
///   [learners.<name>]   one section per family; keys family, lambda,
///                       cv_folds, trees, depth, learning_rate, min_leaf,
///                       honesty_fraction; family defaults to <name>
///   [run]               n_train, n_test, replications, bootstraps,
///                       master_seed, out_dir, threads, histogram_bins,
///                       refit_per_rep, diag_n
///
/// Values are laid over `base`; the first [learners.*] section clears the
/// inherited learner list. Unknown sections or keys are errors. Lines that
/// are blank or start with '#' are skipped.
RunConfig parse_run_config(const std::string& text, const RunConfig& base);
RunConfig load_run_config(const std::string& path, const RunConfig& base);

/// One estimates-table row.
struct EstimateRow {
  std::string family;
  int replication = 0;
  evaluate::PolicyEstimate estimate;
};

/// Per-family artifacts of a run.
struct FamilyResult {
  std::string name;
  std::uint64_t model_digest = 0;
  evaluate::RocResult roc;  // held-out, scored at logged locations
  std::vector<evaluate::CalibrationBin> calibration;
  std::vector<std::string> notes;  // fit diagnostics
};

struct RunResult {
  std::uint64_t env_digest = 0;
  std::vector<FamilyResult> families;
  std::vector<EstimateRow> rows;
  /// Calibration of the ground-truth outcome probabilities on the
  /// diagnostics sample.
  std::vector<evaluate::CalibrationBin> truth_calibration;
  /// Replication-level failures ("family F replication K: reason"); the
  /// failed replication contributes no rows and the run continues.
  std::vector<std::string> errors;
  double wall_seconds = 0.0;
};

/// Method label used in summaries and histograms. Distinguishes the rep-0
/// shuffled-assignment IPW draws (method ipw with bootstrap_index >= 0)
/// from per-replication IPW as "ipw-shuffled".
std::string summary_label(const evaluate::PolicyEstimate& estimate);

/// Executes the full protocol: one causal world and training history per
/// run, one fit per family (unless refit_per_rep), per replication a fresh
/// free-case test set, capacities from its observed locations, an optimal
/// assignment under the fitted scores, and model-based + IPW + oracle
/// estimates; replication 0 additionally runs the bootstrap evaluations and
/// the shuffled-assignment IPW draws. All randomness derives from
/// config.master_seed; results are identical for any thread count.
RunResult run_protocol(const RunConfig& config);

/// Writes estimates.csv, histograms.csv, summary.csv, diagnostics/*.csv and
/// run_manifest.txt under config.out_dir (created if missing).
void write_outputs(const RunResult& result, const RunConfig& config);

/// Rebuilds histograms.csv and summary.csv in out_dir from an existing
/// estimates.csv.
void rebuild_reports(const std::string& estimates_path,
                     const std::string& out_dir, int bins);

}  // namespace curselab::expt
