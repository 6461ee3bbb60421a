#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "curselab/tabular.hpp"
#include "curselab/trees.hpp"

namespace curselab::learners {

enum class Family { ols, ridge, lasso_logit, honest_rf, gbm };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

/// Hyperparameters for one model family. Negative numeric fields mean "use
/// the family default"; resolved() fills them in and validates the result.
/// The lasso penalty is special: a negative lambda requests cross-validated
/// selection, a nonnegative one fixes the penalty (used when bootstrap refits
/// reuse the penalty picked on the original sample).
struct TrainConfig {
  Family family = Family::lasso_logit;
  double lambda = -1.0;
  int cv_folds = 5;
  int trees = -1;
  int depth = -1;
  double learning_rate = -1.0;
  double min_leaf = -1.0;
  double honesty_fraction = -1.0;
  std::uint64_t seed = 0;

  TrainConfig resolved() const;
};

/// Probability-family predictions are clipped into
/// [kProbabilityFloor, 1 - kProbabilityFloor].
inline constexpr double kProbabilityFloor = 1e-6;

/// A fitted outcome model: predict(record, location) estimates the expected
/// outcome of placing the record at the location. Immutable once fitted, so
/// instances may be shared freely across threads.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual Family family() const = 0;
  virtual int num_locations() const = 0;
  /// Probability families return values in [kProbabilityFloor,
  /// 1 - kProbabilityFloor]; linear regression families return the raw
  /// linear response.
  virtual double predict(const tabular::RefugeeRecord& record,
                         int location) const = 0;
  /// Scores for every location at once (out.size() == num_locations()).
  /// Matches predict() exactly; families whose covariate work is shared
  /// across locations override this to do that work once.
  virtual void predict_all(const tabular::RefugeeRecord& record,
                           std::span<double> out) const;
  virtual void save(std::ostream& os) const = 0;
  /// FNV-1a hash of the serialized model, for run manifests.
  std::uint64_t digest() const;
  /// Non-fatal fit diagnostics (rank deficiency, constant fallbacks,
  /// convergence warnings).
  const std::vector<std::string>& notes() const { return notes_; }

 protected:
  std::vector<std::string> notes_;
};

/// Least squares on an explicit design matrix (rows are observations).
/// Full-rank designs solve the normal equations; rank-deficient designs fall
/// back to the minimum-norm least-squares solution and set *rank_deficient.
std::vector<double> ols_coefficients(const std::vector<std::vector<double>>& x,
                                     const std::vector<double>& y,
                                     bool* rank_deficient = nullptr);

/// Ridge with the 1/n loss scaling:
/// beta = (X'X/n + lambda I)^{-1} (X'y/n), lambda > 0.
std::vector<double> ridge_coefficients(
    const std::vector<std::vector<double>>& x, const std::vector<double>& y,
    double lambda);

/// Same solve from precomputed moments sigma = X'X/n and xty = X'y/n.
std::vector<double> ridge_from_moments(
    const std::vector<std::vector<double>>& sigma,
    const std::vector<double>& xty, double lambda);

/// Linear response over FeatureMap features with no explicit intercept: the
/// all-categories one-hot blocks already span the constant function, so an
/// intercept column would only add collinearity.
class LinearModel : public OutcomeModel {
 public:
  LinearModel(Family family, tabular::FeatureMap map,
              std::vector<double> coefficients);

  Family family() const override { return family_; }
  int num_locations() const override { return map_.num_locations(); }
  double predict(const tabular::RefugeeRecord& record,
                 int location) const override;
  void predict_all(const tabular::RefugeeRecord& record,
                   std::span<double> out) const override;
  void save(std::ostream& os) const override;

  const std::vector<double>& coefficients() const { return coefficients_; }
  const tabular::FeatureMap& feature_map() const { return map_; }

 private:
  friend LinearModel fit_ols(const tabular::Dataset&,
                             const tabular::FeatureMap&);
  Family family_;
  tabular::FeatureMap map_;
  std::vector<double> coefficients_;
};

LinearModel fit_ols(const tabular::Dataset& data,
                    const tabular::FeatureMap& map);
LinearModel fit_ridge(const tabular::Dataset& data,
                      const tabular::FeatureMap& map, double lambda);

/// L1-penalized logistic regression fitted by cyclic proximal coordinate
/// descent, intercept unpenalized.
class LassoLogitModel : public OutcomeModel {
 public:
  Family family() const override { return Family::lasso_logit; }
  int num_locations() const override { return map_.num_locations(); }
  double predict(const tabular::RefugeeRecord& record,
                 int location) const override;
  void predict_all(const tabular::RefugeeRecord& record,
                   std::span<double> out) const override;
  void save(std::ostream& os) const override;

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  /// Penalty actually used: the cross-validation choice, or the fixed value
  /// from the config.
  double selected_lambda() const { return lambda_; }
  const tabular::FeatureMap& feature_map() const { return map_; }

 private:
  friend LassoLogitModel fit_lasso_logit(const tabular::Dataset&,
                                         const tabular::FeatureMap&,
                                         const TrainConfig&);
  friend std::unique_ptr<OutcomeModel> load_model(std::istream&);
  tabular::FeatureMap map_;
  double intercept_ = 0.0;
  std::vector<double> coefficients_;
  double lambda_ = 0.0;
};

LassoLogitModel fit_lasso_logit(const tabular::Dataset& data,
                                const tabular::FeatureMap& map,
                                const TrainConfig& config);

/// One location's fitted trees, or a constant fallback. For honest forests
/// `value` is the fallback probability; for boosted models it is the base
/// log-odds score.
struct LocationForest {
  bool constant = false;
  double value = 0.0;
  trees::Forest forest;
};

/// Per-location honest random forests: each tree bootstraps the location
/// subsample and splits it into a structure part (chooses splits) and an
/// estimation part (sets leaf values) so that leaf means never see the
/// outcomes that shaped the tree.
class HonestForestModel : public OutcomeModel {
 public:
  Family family() const override { return Family::honest_rf; }
  int num_locations() const override {
    return static_cast<int>(locations_.size());
  }
  double predict(const tabular::RefugeeRecord& record,
                 int location) const override;
  void predict_all(const tabular::RefugeeRecord& record,
                   std::span<double> out) const override;
  void save(std::ostream& os) const override;

  const LocationForest& submodel(int location) const;
  const tabular::FeatureMap& feature_map() const { return map_; }

 private:
  friend HonestForestModel fit_honest_rf(const tabular::Dataset&,
                                         const tabular::FeatureMap&,
                                         const TrainConfig&);
  friend std::unique_ptr<OutcomeModel> load_model(std::istream&);
  tabular::FeatureMap map_;
  std::vector<LocationForest> locations_;
};

HonestForestModel fit_honest_rf(const tabular::Dataset& data,
                                const tabular::FeatureMap& map,
                                const TrainConfig& config);

/// Per-location gradient-boosted classification trees: stagewise logistic
/// boosting from the subsample log-odds, residual-fitted trees with
/// one-Newton-step leaf values, prediction sigmoid(base + lr * sum of trees).
class GbmModel : public OutcomeModel {
 public:
  Family family() const override { return Family::gbm; }
  int num_locations() const override {
    return static_cast<int>(locations_.size());
  }
  double predict(const tabular::RefugeeRecord& record,
                 int location) const override;
  void predict_all(const tabular::RefugeeRecord& record,
                   std::span<double> out) const override;
  void save(std::ostream& os) const override;

  double learning_rate() const { return learning_rate_; }
  const LocationForest& submodel(int location) const;
  const tabular::FeatureMap& feature_map() const { return map_; }

 private:
  friend GbmModel fit_gbm(const tabular::Dataset&, const tabular::FeatureMap&,
                          const TrainConfig&);
  friend std::unique_ptr<OutcomeModel> load_model(std::istream&);
  tabular::FeatureMap map_;
  std::vector<LocationForest> locations_;
  double learning_rate_ = 0.1;
};

GbmModel fit_gbm(const tabular::Dataset& data, const tabular::FeatureMap& map,
                 const TrainConfig& config);

/// Fits the configured family on the training sample, building the feature
/// map the family expects (pooled interaction features for the linear and
/// lasso families, covariate-only features for the per-location tree
/// families).
std::unique_ptr<OutcomeModel> fit_model(const tabular::Dataset& train,
                                        const TrainConfig& config);

/// Round trip for the versioned text format written by save().
std::unique_ptr<OutcomeModel> load_model(std::istream& is);

/// scores[i][t] = model.predict(record i, location t), computed in parallel
/// over records into index-addressed slots.
std::vector<std::vector<double>> score_matrix(
    const OutcomeModel& model,
    const std::vector<tabular::RefugeeRecord>& records, int threads = 1);

}  // namespace curselab::learners
