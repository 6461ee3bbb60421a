#include "curselab/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "curselab/common.hpp"
#include "curselab/rng.hpp"

namespace curselab::learners {

std::string_view family_name(Family family) {
  switch (family) {
    case Family::ols: return "ols";
    case Family::ridge: return "ridge";
    case Family::lasso_logit: return "lasso-logit";
    case Family::honest_rf: return "honest-rf";
    case Family::gbm: return "gbm";
  }
  fail("family_name: unknown family");
}

Family parse_family(std::string_view name) {
  if (name == "ols") return Family::ols;
  if (name == "ridge") return Family::ridge;
  if (name == "lasso-logit") return Family::lasso_logit;
  if (name == "honest-rf") return Family::honest_rf;
  if (name == "gbm") return Family::gbm;
  fail("unknown model family '" + std::string(name) + "'");
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig c = *this;
  switch (c.family) {
    case Family::ols:
    case Family::ridge:
      break;
    case Family::lasso_logit:
      if (c.cv_folds < 2) fail("lasso: cv_folds must be at least 2");
      break;
    case Family::honest_rf:
      if (c.trees < 0) c.trees = 200;
      if (c.depth < 0) c.depth = 12;
      if (c.min_leaf < 0.0) c.min_leaf = 10.0;
      if (c.honesty_fraction < 0.0) c.honesty_fraction = 0.5;
      break;
    case Family::gbm:
      if (c.trees < 0) c.trees = 150;
      if (c.depth < 0) c.depth = 3;
      if (c.min_leaf < 0.0) c.min_leaf = 5.0;
      if (c.learning_rate < 0.0) c.learning_rate = 0.1;
      break;
  }
  if (c.family == Family::honest_rf || c.family == Family::gbm) {
    if (c.trees <= 0) fail("tree families need a positive tree count");
    if (c.depth < 0) fail("tree families need a nonnegative depth");
    if (c.min_leaf <= 0.0) fail("tree families need a positive min_leaf");
  }
  if (c.family == Family::gbm &&
      !(c.learning_rate > 0.0 && c.learning_rate <= 1.0))
    fail("gbm: learning_rate must lie in (0, 1]");
  if (c.family == Family::honest_rf &&
      !(c.honesty_fraction > 0.0 && c.honesty_fraction < 1.0))
    fail("honest-rf: honesty_fraction must lie strictly inside (0, 1)");
  return c;
}

void OutcomeModel::predict_all(const tabular::RefugeeRecord& record,
                               std::span<double> out) const {
  if (static_cast<int>(out.size()) != num_locations())
    fail("predict_all: output span size must equal num_locations");
  for (int t = 0; t < num_locations(); ++t)
    out[static_cast<std::size_t>(t)] = predict(record, t);
}

std::uint64_t OutcomeModel::digest() const {
  std::ostringstream ss;
  save(ss);
  return fnv1a64(ss.str());
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& x) {
  if (x.empty()) fail("design matrix has no rows");
  auto n = static_cast<Eigen::Index>(x.size());
  auto m = static_cast<Eigen::Index>(x[0].size());
  if (m == 0) fail("design matrix has no columns");
  Eigen::MatrixXd a(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = x[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != m)
      fail("design matrix is ragged");
    for (Eigen::Index j = 0; j < m; ++j)
      a(i, j) = row[static_cast<std::size_t>(j)];
  }
  return a;
}

Eigen::VectorXd to_vector(const std::vector<double>& y) {
  return Eigen::Map<const Eigen::VectorXd>(
      y.data(), static_cast<Eigen::Index>(y.size()));
}

std::vector<double> from_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

std::vector<double> ols_coefficients(const std::vector<std::vector<double>>& x,
                                     const std::vector<double>& y,
                                     bool* rank_deficient) {
  Eigen::MatrixXd a = to_matrix(x);
  if (static_cast<std::size_t>(a.rows()) != y.size())
    fail("ols: response length does not match the design");
  Eigen::VectorXd yv = to_vector(y);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  if (rank_deficient) *rank_deficient = cod.rank() < a.cols();
  if (cod.rank() < a.cols()) {
    // Minimum-norm least-squares solution for rank-deficient designs.
    return from_vector(cod.solve(yv));
  }
  Eigen::MatrixXd gram = a.transpose() * a;
  return from_vector(gram.ldlt().solve(a.transpose() * yv));
}

std::vector<double> ridge_coefficients(
    const std::vector<std::vector<double>>& x, const std::vector<double>& y,
    double lambda) {
  Eigen::MatrixXd a = to_matrix(x);
  if (static_cast<std::size_t>(a.rows()) != y.size())
    fail("ridge: response length does not match the design");
  if (!(lambda > 0.0)) fail("ridge: lambda must be positive");
  double n = static_cast<double>(a.rows());
  Eigen::MatrixXd sigma = (a.transpose() * a) / n;
  Eigen::VectorXd xty = (a.transpose() * to_vector(y)) / n;
  sigma.diagonal().array() += lambda;
  return from_vector(sigma.llt().solve(xty));
}

std::vector<double> ridge_from_moments(
    const std::vector<std::vector<double>>& sigma,
    const std::vector<double>& xty, double lambda) {
  Eigen::MatrixXd s = to_matrix(sigma);
  if (s.rows() != s.cols()) fail("ridge: moment matrix must be square");
  if (static_cast<std::size_t>(s.rows()) != xty.size())
    fail("ridge: moment vector length mismatch");
  if (!(lambda > 0.0)) fail("ridge: lambda must be positive");
  Eigen::MatrixXd reg = s;
  reg.diagonal().array() += lambda;
  return from_vector(reg.llt().solve(to_vector(xty)));
}

namespace {

/// Linear response per location from one sparse encoding. The sparse layout
/// puts one covariate entry per covariate first, so every location's score
/// can be assembled without re-encoding.
void linear_scores(const tabular::FeatureMap& map,
                   std::span<const double> beta, double intercept,
                   const tabular::RefugeeRecord& record,
                   std::span<double> out) {
  std::vector<std::pair<int, double>> sparse;
  map.encode_sparse(record, 0, sparse);
  std::size_t ncov = map.schema().size();
  double cov_part = intercept;
  for (std::size_t k = 0; k < ncov; ++k)
    cov_part += beta[static_cast<std::size_t>(sparse[k].first)] *
                sparse[k].second;
  if (map.mode() == tabular::FeatureMode::covariates_only) {
    std::fill(out.begin(), out.end(), cov_part);
    return;
  }
  int cd = map.covariate_block_size();
  int L = map.num_locations();
  if (static_cast<int>(out.size()) != L)
    fail("linear_scores: output span size must equal the location count");
  for (int t = 0; t < L; ++t) {
    double s = cov_part + beta[static_cast<std::size_t>(cd + t)];
    if (map.mode() == tabular::FeatureMode::interactions) {
      int base = cd + L;
      for (std::size_t k = 0; k < ncov; ++k)
        s += beta[static_cast<std::size_t>(base + sparse[k].first * L + t)] *
             sparse[k].second;
    }
    out[static_cast<std::size_t>(t)] = s;
  }
}

double linear_score_one(const tabular::FeatureMap& map,
                        std::span<const double> beta, double intercept,
                        const tabular::RefugeeRecord& record, int location) {
  std::vector<std::pair<int, double>> sparse;
  map.encode_sparse(record, location, sparse);
  double s = intercept;
  for (auto [j, v] : sparse) s += beta[static_cast<std::size_t>(j)] * v;
  return s;
}

void write_coefficients(std::ostream& os, const std::vector<double>& beta) {
  os << "coefficients " << beta.size() << '\n';
  for (std::size_t j = 0; j < beta.size(); ++j)
    os << (j ? " " : "") << format_double(beta[j]);
  os << '\n';
}

std::vector<double> read_coefficients(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "coefficients")
    fail("model load: bad coefficient header");
  std::vector<double> beta(count);
  for (auto& b : beta)
    if (!(is >> b)) fail("model load: truncated coefficient list");
  return beta;
}

}  // namespace

LinearModel::LinearModel(Family family, tabular::FeatureMap map,
                         std::vector<double> coefficients)
    : family_(family), map_(std::move(map)),
      coefficients_(std::move(coefficients)) {
  if (family_ != Family::ols && family_ != Family::ridge)
    fail("LinearModel: family must be ols or ridge");
  if (static_cast<int>(coefficients_.size()) != map_.dimension())
    fail("LinearModel: coefficient count must match the feature dimension");
}

double LinearModel::predict(const tabular::RefugeeRecord& record,
                            int location) const {
  return linear_score_one(map_, coefficients_, 0.0, record, location);
}

void LinearModel::predict_all(const tabular::RefugeeRecord& record,
                              std::span<double> out) const {
  linear_scores(map_, coefficients_, 0.0, record, out);
}

void LinearModel::save(std::ostream& os) const {
  os << "model 1\nfamily " << family_name(family_) << '\n';
  map_.save(os);
  write_coefficients(os, coefficients_);
}

LinearModel fit_ols(const tabular::Dataset& data,
                    const tabular::FeatureMap& map) {
  data.validate();
  std::vector<std::vector<double>> x;
  x.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    x.push_back(map.encode(data.records[i], data.locations[i]));
  std::vector<double> y(data.outcomes.begin(), data.outcomes.end());
  bool deficient = false;
  std::vector<double> beta = ols_coefficients(x, y, &deficient);
  LinearModel model(Family::ols, map, std::move(beta));
  if (deficient)
    model.notes_.push_back("ols: rank-deficient design, minimum-norm solution");
  return model;
}

LinearModel fit_ridge(const tabular::Dataset& data,
                      const tabular::FeatureMap& map, double lambda) {
  data.validate();
  std::vector<std::vector<double>> x;
  x.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    x.push_back(map.encode(data.records[i], data.locations[i]));
  std::vector<double> y(data.outcomes.begin(), data.outcomes.end());
  return LinearModel(Family::ridge, map, ridge_coefficients(x, y, lambda));
}

// ---------------------------------------------------------------------------
// LASSO-penalized logistic regression.

namespace {

/// Column-compressed view of the encoded training design.
struct SparseDesign {
  int n = 0;
  int m = 0;
  std::vector<std::vector<int>> rows;
  std::vector<std::vector<double>> vals;
};

SparseDesign build_design(const tabular::Dataset& data,
                          const tabular::FeatureMap& map) {
  SparseDesign d;
  d.n = static_cast<int>(data.size());
  d.m = map.dimension();
  d.rows.resize(static_cast<std::size_t>(d.m));
  d.vals.resize(static_cast<std::size_t>(d.m));
  std::vector<std::pair<int, double>> sparse;
  for (int i = 0; i < d.n; ++i) {
    auto u = static_cast<std::size_t>(i);
    map.encode_sparse(data.records[u], data.locations[u], sparse);
    for (auto [j, v] : sparse) {
      if (v == 0.0) continue;
      d.rows[static_cast<std::size_t>(j)].push_back(i);
      d.vals[static_cast<std::size_t>(j)].push_back(v);
    }
  }
  return d;
}

struct CdState {
  double intercept = 0.0;
  std::vector<double> beta;  // length m
  std::vector<double> eta;   // length n, full linear predictor per row
};

double soft_threshold(double u, double a) {
  if (u > a) return u - a;
  if (u < -a) return u + a;
  return 0.0;
}

/// One fit at a fixed penalty by cyclic proximal coordinate descent. The
/// quadratic majorizer uses the global 1/4 bound on the logistic curvature,
/// so every coordinate step decreases the penalized loss. Rows with zero
/// weight are excluded from the loss but their linear predictors are kept
/// current for held-out evaluation. Returns false if the sweep cap was hit.
bool cd_fit(const SparseDesign& d, const std::vector<double>& y,
            const std::vector<char>& in_fit, double fit_rows,
            const std::vector<double>& curvature, double lambda, CdState& s,
            int max_sweeps, double tol) {
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_step = 0.0;

    double g0 = 0.0;
    for (int i = 0; i < d.n; ++i) {
      auto u = static_cast<std::size_t>(i);
      if (in_fit[u]) g0 += sigmoid(s.eta[u]) - y[u];
    }
    g0 /= fit_rows;
    double step0 = -g0 / 0.25;
    if (step0 != 0.0) {
      s.intercept += step0;
      for (double& e : s.eta) e += step0;
      max_step = std::abs(step0);
    }

    for (int j = 0; j < d.m; ++j) {
      auto ju = static_cast<std::size_t>(j);
      double h = curvature[ju];
      if (h <= 0.0) continue;
      const auto& rows = d.rows[ju];
      const auto& vals = d.vals[ju];
      double g = 0.0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        auto u = static_cast<std::size_t>(rows[k]);
        if (in_fit[u]) g += (sigmoid(s.eta[u]) - y[u]) * vals[k];
      }
      g /= fit_rows;
      double nb = soft_threshold(s.beta[ju] - g / h, lambda / h);
      double delta = nb - s.beta[ju];
      if (delta != 0.0) {
        s.beta[ju] = nb;
        for (std::size_t k = 0; k < rows.size(); ++k)
          s.eta[static_cast<std::size_t>(rows[k])] += delta * vals[k];
        max_step = std::max(max_step, std::abs(delta));
      }
    }
    if (max_step < tol) return true;
  }
  return false;
}

struct FitPlan {
  std::vector<char> in_fit;
  double fit_rows = 0.0;
  std::vector<double> curvature;  // 0.25 * mean x^2 per feature over fit rows
  double mean_y = 0.0;
};

FitPlan make_plan(const SparseDesign& d, const std::vector<double>& y,
                  const std::vector<char>& in_fit) {
  FitPlan p;
  p.in_fit = in_fit;
  double sum_y = 0.0;
  for (int i = 0; i < d.n; ++i) {
    auto u = static_cast<std::size_t>(i);
    if (!in_fit[u]) continue;
    p.fit_rows += 1.0;
    sum_y += y[u];
  }
  if (p.fit_rows <= 0.0) fail("lasso: no rows to fit");
  p.mean_y = sum_y / p.fit_rows;
  p.curvature.assign(static_cast<std::size_t>(d.m), 0.0);
  for (int j = 0; j < d.m; ++j) {
    auto ju = static_cast<std::size_t>(j);
    double ss = 0.0;
    for (std::size_t k = 0; k < d.rows[ju].size(); ++k) {
      if (in_fit[static_cast<std::size_t>(d.rows[ju][k])]) {
        double v = d.vals[ju][k];
        ss += v * v;
      }
    }
    p.curvature[ju] = 0.25 * ss / p.fit_rows;
  }
  return p;
}

/// Smallest penalty that zeroes every non-intercept coefficient: the largest
/// absolute mean-gradient coordinate at the intercept-only model.
double lambda_max(const SparseDesign& d, const std::vector<double>& y,
                  const FitPlan& plan) {
  double pbar = clamp01(plan.mean_y, kProbabilityFloor);
  double worst = 0.0;
  for (int j = 0; j < d.m; ++j) {
    auto ju = static_cast<std::size_t>(j);
    double g = 0.0;
    for (std::size_t k = 0; k < d.rows[ju].size(); ++k) {
      auto u = static_cast<std::size_t>(d.rows[ju][k]);
      if (plan.in_fit[u]) g += (pbar - y[u]) * d.vals[ju][k];
    }
    worst = std::max(worst, std::abs(g) / plan.fit_rows);
  }
  return worst > 0.0 ? worst : 1e-12;
}

CdState fresh_state(const SparseDesign& d, const FitPlan& plan) {
  CdState s;
  s.intercept = logit(clamp01(plan.mean_y, kProbabilityFloor));
  s.beta.assign(static_cast<std::size_t>(d.m), 0.0);
  s.eta.assign(static_cast<std::size_t>(d.n), s.intercept);
  return s;
}

constexpr int kLassoGridPoints = 30;
constexpr double kLassoGridDecades = 4.0;
constexpr int kLassoMaxSweeps = 1000;
constexpr double kLassoTol = 1e-7;

std::vector<double> penalty_grid(double top) {
  std::vector<double> grid(kLassoGridPoints);
  for (int k = 0; k < kLassoGridPoints; ++k)
    grid[static_cast<std::size_t>(k)] =
        top * std::pow(10.0, -kLassoGridDecades * k / (kLassoGridPoints - 1));
  return grid;
}

double held_out_logloss(const CdState& s, const std::vector<double>& y,
                        const std::vector<char>& in_fit) {
  double loss = 0.0;
  double count = 0.0;
  for (std::size_t u = 0; u < y.size(); ++u) {
    if (in_fit[u]) continue;
    double p = clamp01(sigmoid(s.eta[u]), 1e-12);
    loss += y[u] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
    count += 1.0;
  }
  return count > 0.0 ? loss / count : 0.0;
}

}  // namespace

double LassoLogitModel::predict(const tabular::RefugeeRecord& record,
                                int location) const {
  double s = linear_score_one(map_, coefficients_, intercept_, record,
                              location);
  return clamp01(sigmoid(s), kProbabilityFloor);
}

void LassoLogitModel::predict_all(const tabular::RefugeeRecord& record,
                                  std::span<double> out) const {
  linear_scores(map_, coefficients_, intercept_, record, out);
  for (double& v : out) v = clamp01(sigmoid(v), kProbabilityFloor);
}

void LassoLogitModel::save(std::ostream& os) const {
  os << "model 1\nfamily " << family_name(Family::lasso_logit) << '\n';
  map_.save(os);
  os << "lambda " << format_double(lambda_) << '\n';
  os << "intercept " << format_double(intercept_) << '\n';
  write_coefficients(os, coefficients_);
}

LassoLogitModel fit_lasso_logit(const tabular::Dataset& data,
                                const tabular::FeatureMap& map,
                                const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.family = Family::lasso_logit;
  cfg = cfg.resolved();
  data.validate();
  int n = static_cast<int>(data.size());

  SparseDesign design = build_design(data, map);
  std::vector<double> y(data.outcomes.begin(), data.outcomes.end());
  std::vector<char> all_rows(static_cast<std::size_t>(n), 1);
  FitPlan full_plan = make_plan(design, y, all_rows);
  double top = lambda_max(design, y, full_plan);

  int stalled_fits = 0;
  auto run_path = [&](const FitPlan& plan, const std::vector<double>& grid,
                      const std::function<void(std::size_t, const CdState&)>&
                          at_point) {
    CdState state = fresh_state(design, plan);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!cd_fit(design, y, plan.in_fit, plan.fit_rows, plan.curvature,
                  grid[k], state, kLassoMaxSweeps, kLassoTol))
        ++stalled_fits;
      if (at_point) at_point(k, state);
    }
    return state;
  };

  double chosen = cfg.lambda;
  std::vector<double> final_grid;
  if (cfg.lambda < 0.0) {
    // Cross-validated penalty selection over a shared geometric grid.
    if (n < cfg.cv_folds) fail("lasso: fewer rows than cv folds");
    std::vector<double> grid = penalty_grid(top);
    std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
    std::vector<int> perm = rng::Rng(cfg.seed).child("lasso-cv").permutation(n);
    for (int k = 0; k < n; ++k)
      fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] =
          k % cfg.cv_folds;

    std::vector<double> cv_loss(grid.size(), 0.0);
    for (int f = 0; f < cfg.cv_folds; ++f) {
      std::vector<char> in_fit(static_cast<std::size_t>(n), 1);
      for (int i = 0; i < n; ++i)
        if (fold_of[static_cast<std::size_t>(i)] == f)
          in_fit[static_cast<std::size_t>(i)] = 0;
      FitPlan plan = make_plan(design, y, in_fit);
      run_path(plan, grid, [&](std::size_t k, const CdState& s) {
        cv_loss[k] += held_out_logloss(s, y, in_fit);
      });
    }
    // Scanning from the largest penalty with a strict comparison keeps the
    // larger penalty on ties.
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (cv_loss[k] < cv_loss[best]) best = k;
    chosen = grid[best];
    final_grid.assign(grid.begin(), grid.begin() + static_cast<long>(best + 1));
  } else {
    // Fixed penalty (bootstrap refits reuse the penalty chosen on the
    // original sample); warm up along the standard grid above it.
    for (double g : penalty_grid(top))
      if (g > chosen) final_grid.push_back(g);
    final_grid.push_back(chosen);
  }

  CdState state = run_path(full_plan, final_grid, nullptr);

  LassoLogitModel model;
  model.map_ = map;
  model.intercept_ = state.intercept;
  model.coefficients_ = std::move(state.beta);
  model.lambda_ = chosen;
  if (stalled_fits > 0)
    model.notes_.push_back("lasso: " + std::to_string(stalled_fits) +
                           " path fit(s) stopped at the sweep cap");
  return model;
}

// ---------------------------------------------------------------------------
// Per-location tree families.

namespace {

/// Dense covariate encodings of the given rows, as feature-major columns
/// (for the tree builder) and row-major features (for boosting updates).
struct EncodedRows {
  std::vector<std::vector<double>> columns;
  std::vector<double> flat;  // row-major, n * m
  int n = 0;
  int m = 0;
  std::span<const double> row(int i) const {
    return {flat.data() + static_cast<std::size_t>(i) *
                              static_cast<std::size_t>(m),
            static_cast<std::size_t>(m)};
  }
};

EncodedRows encode_rows(const tabular::FeatureMap& map,
                        const std::vector<tabular::RefugeeRecord>& records,
                        const std::vector<int>& idx) {
  EncodedRows e;
  e.n = static_cast<int>(idx.size());
  e.m = map.dimension();
  e.columns.assign(static_cast<std::size_t>(e.m),
                   std::vector<double>(static_cast<std::size_t>(e.n)));
  e.flat.resize(static_cast<std::size_t>(e.n) * static_cast<std::size_t>(e.m));
  std::vector<double> buf(static_cast<std::size_t>(e.m));
  for (int k = 0; k < e.n; ++k) {
    map.encode_into(records[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])], 0,
                    buf);
    for (int j = 0; j < e.m; ++j) {
      e.columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
          buf[static_cast<std::size_t>(j)];
      e.flat[static_cast<std::size_t>(k) * static_cast<std::size_t>(e.m) +
             static_cast<std::size_t>(j)] = buf[static_cast<std::size_t>(j)];
    }
  }
  return e;
}

std::vector<std::vector<int>> rows_by_location(const tabular::Dataset& data) {
  std::vector<std::vector<int>> idx(
      static_cast<std::size_t>(data.num_locations));
  for (std::size_t i = 0; i < data.size(); ++i)
    idx[static_cast<std::size_t>(data.locations[i])].push_back(
        static_cast<int>(i));
  return idx;
}

double mean_outcome(const tabular::Dataset& data) {
  double s = 0.0;
  for (int v : data.outcomes) s += v;
  return data.size() ? s / static_cast<double>(data.size()) : 0.0;
}

void require_covariates_only(const tabular::FeatureMap& map,
                             const char* what) {
  if (map.mode() != tabular::FeatureMode::covariates_only)
    fail(std::string(what) + ": expects a covariates-only feature map");
}

int sqrt_feature_count(int m) {
  return std::max(1, static_cast<int>(std::lround(std::sqrt(
                         static_cast<double>(m)))));
}

void save_location_forests(std::ostream& os,
                           const std::vector<LocationForest>& locs,
                           bool base_score) {
  os << "locations " << locs.size() << '\n';
  for (std::size_t t = 0; t < locs.size(); ++t) {
    const auto& lf = locs[t];
    if (lf.constant) {
      os << "location " << t << " constant " << format_double(lf.value)
         << '\n';
    } else {
      os << "location " << t << (base_score ? " base " : " forest ")
         << format_double(lf.value) << '\n';
      lf.forest.save(os);
    }
  }
}

std::vector<LocationForest> load_location_forests(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "locations")
    fail("model load: bad location header");
  std::vector<LocationForest> locs(count);
  for (std::size_t t = 0; t < count; ++t) {
    std::size_t got = 0;
    std::string kind;
    if (!(is >> tag >> got >> kind) || tag != "location" || got != t)
      fail("model load: bad location entry");
    if (!(is >> locs[t].value)) fail("model load: truncated location value");
    if (kind == "constant") {
      locs[t].constant = true;
    } else if (kind == "forest" || kind == "base") {
      locs[t].forest = trees::Forest::load(is);
    } else {
      fail("model load: unknown location kind '" + kind + "'");
    }
  }
  return locs;
}

}  // namespace

const LocationForest& HonestForestModel::submodel(int location) const {
  if (location < 0 || location >= num_locations())
    fail("submodel: location out of range");
  return locations_[static_cast<std::size_t>(location)];
}

double HonestForestModel::predict(const tabular::RefugeeRecord& record,
                                  int location) const {
  const LocationForest& lf = submodel(location);
  if (lf.constant) return clamp01(lf.value, kProbabilityFloor);
  std::vector<double> x = map_.encode(record, 0);
  return clamp01(lf.forest.predict(x), kProbabilityFloor);
}

void HonestForestModel::predict_all(const tabular::RefugeeRecord& record,
                                    std::span<double> out) const {
  if (static_cast<int>(out.size()) != num_locations())
    fail("predict_all: output span size must equal num_locations");
  std::vector<double> x = map_.encode(record, 0);
  for (int t = 0; t < num_locations(); ++t) {
    const LocationForest& lf = locations_[static_cast<std::size_t>(t)];
    out[static_cast<std::size_t>(t)] = clamp01(
        lf.constant ? lf.value : lf.forest.predict(x), kProbabilityFloor);
  }
}

void HonestForestModel::save(std::ostream& os) const {
  os << "model 1\nfamily " << family_name(Family::honest_rf) << '\n';
  map_.save(os);
  save_location_forests(os, locations_, false);
}

HonestForestModel fit_honest_rf(const tabular::Dataset& data,
                                const tabular::FeatureMap& map,
                                const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.family = Family::honest_rf;
  cfg = cfg.resolved();
  data.validate();
  require_covariates_only(map, "fit_honest_rf");

  HonestForestModel model;
  model.map_ = map;
  model.locations_.resize(static_cast<std::size_t>(data.num_locations));
  double global_mean = mean_outcome(data);
  auto by_loc = rows_by_location(data);
  rng::Rng root(cfg.seed);

  for (int t = 0; t < data.num_locations; ++t) {
    const auto& idx = by_loc[static_cast<std::size_t>(t)];
    LocationForest& lf = model.locations_[static_cast<std::size_t>(t)];
    int nt = static_cast<int>(idx.size());
    if (nt == 0) {
      lf.constant = true;
      lf.value = global_mean;
      model.notes_.push_back("honest-rf: location " + std::to_string(t) +
                             " has no rows; constant global mean");
      continue;
    }
    std::vector<double> yt(static_cast<std::size_t>(nt));
    double sum = 0.0;
    for (int k = 0; k < nt; ++k) {
      yt[static_cast<std::size_t>(k)] =
          data.outcomes[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      sum += yt[static_cast<std::size_t>(k)];
    }
    if (static_cast<double>(nt) < 2.0 * cfg.min_leaf) {
      lf.constant = true;
      lf.value = sum / static_cast<double>(nt);
      model.notes_.push_back("honest-rf: location " + std::to_string(t) +
                             " subsample too small; constant mean");
      continue;
    }

    EncodedRows enc = encode_rows(map, data.records, idx);
    trees::ColumnSet columns(std::move(enc.columns));
    trees::TreeParams params;
    params.max_depth = cfg.depth;
    params.min_leaf_weight = cfg.min_leaf;
    params.features_per_split = sqrt_feature_count(enc.m);

    // Each tree bootstraps the subsample; the first ceil(h * n) draws carry
    // split weight (structure part), the rest carry value weight
    // (estimation part), so the halves stay disjoint as multisets of draws.
    int structure_draws = std::min(
        nt - 1, static_cast<int>(std::ceil(cfg.honesty_fraction *
                                           static_cast<double>(nt))));
    structure_draws = std::max(1, structure_draws);
    std::vector<double> ones(static_cast<std::size_t>(nt), 1.0);
    rng::Rng loc_rng = root.child("location", static_cast<std::uint64_t>(t));
    lf.forest.trees.reserve(static_cast<std::size_t>(cfg.trees));
    std::vector<double> w_split(static_cast<std::size_t>(nt));
    std::vector<double> w_value(static_cast<std::size_t>(nt));
    for (int k = 0; k < cfg.trees; ++k) {
      rng::Rng tree_rng = loc_rng.child("tree", static_cast<std::uint64_t>(k));
      std::fill(w_split.begin(), w_split.end(), 0.0);
      std::fill(w_value.begin(), w_value.end(), 0.0);
      for (int draw = 0; draw < nt; ++draw) {
        auto pick = static_cast<std::size_t>(
            tree_rng.uniform_int(static_cast<std::uint64_t>(nt)));
        (draw < structure_draws ? w_split : w_value)[pick] += 1.0;
      }
      trees::TreeData tdata{yt, w_split, yt, ones, w_value};
      lf.forest.trees.push_back(
          trees::build_tree(columns, tdata, params, tree_rng));
    }
  }
  return model;
}

const LocationForest& GbmModel::submodel(int location) const {
  if (location < 0 || location >= num_locations())
    fail("submodel: location out of range");
  return locations_[static_cast<std::size_t>(location)];
}

double GbmModel::predict(const tabular::RefugeeRecord& record,
                         int location) const {
  const LocationForest& lf = submodel(location);
  if (lf.constant) return clamp01(lf.value, kProbabilityFloor);
  std::vector<double> x = map_.encode(record, 0);
  double score = lf.value;
  for (const auto& tree : lf.forest.trees)
    score += learning_rate_ * tree.predict(x);
  return clamp01(sigmoid(score), kProbabilityFloor);
}

void GbmModel::predict_all(const tabular::RefugeeRecord& record,
                           std::span<double> out) const {
  if (static_cast<int>(out.size()) != num_locations())
    fail("predict_all: output span size must equal num_locations");
  std::vector<double> x = map_.encode(record, 0);
  for (int t = 0; t < num_locations(); ++t) {
    const LocationForest& lf = locations_[static_cast<std::size_t>(t)];
    if (lf.constant) {
      out[static_cast<std::size_t>(t)] = clamp01(lf.value, kProbabilityFloor);
      continue;
    }
    double score = lf.value;
    for (const auto& tree : lf.forest.trees)
      score += learning_rate_ * tree.predict(x);
    out[static_cast<std::size_t>(t)] =
        clamp01(sigmoid(score), kProbabilityFloor);
  }
}

void GbmModel::save(std::ostream& os) const {
  os << "model 1\nfamily " << family_name(Family::gbm) << '\n';
  map_.save(os);
  os << "learning_rate " << format_double(learning_rate_) << '\n';
  save_location_forests(os, locations_, true);
}

GbmModel fit_gbm(const tabular::Dataset& data, const tabular::FeatureMap& map,
                 const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.family = Family::gbm;
  cfg = cfg.resolved();
  data.validate();
  require_covariates_only(map, "fit_gbm");

  GbmModel model;
  model.map_ = map;
  model.learning_rate_ = cfg.learning_rate;
  model.locations_.resize(static_cast<std::size_t>(data.num_locations));
  double global_mean = mean_outcome(data);
  auto by_loc = rows_by_location(data);
  rng::Rng root(cfg.seed);

  // Newton leaf values are capped so a near-pure leaf cannot blow up the
  // boosted score.
  constexpr double kMaxLeafStep = 4.0;

  for (int t = 0; t < data.num_locations; ++t) {
    const auto& idx = by_loc[static_cast<std::size_t>(t)];
    LocationForest& lf = model.locations_[static_cast<std::size_t>(t)];
    int nt = static_cast<int>(idx.size());
    if (nt == 0) {
      lf.constant = true;
      lf.value = clamp01(global_mean, kProbabilityFloor);
      model.notes_.push_back("gbm: location " + std::to_string(t) +
                             " has no rows; constant global mean");
      continue;
    }
    std::vector<double> yt(static_cast<std::size_t>(nt));
    double sum = 0.0;
    for (int k = 0; k < nt; ++k) {
      yt[static_cast<std::size_t>(k)] =
          data.outcomes[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      sum += yt[static_cast<std::size_t>(k)];
    }
    double mean = sum / static_cast<double>(nt);
    if (mean <= 0.0 || mean >= 1.0) {
      lf.constant = true;
      lf.value = clamp01(mean, kProbabilityFloor);
      model.notes_.push_back("gbm: location " + std::to_string(t) +
                             " has a one-class subsample; constant model");
      continue;
    }
    if (static_cast<double>(nt) < 2.0 * cfg.min_leaf) {
      lf.constant = true;
      lf.value = clamp01(mean, kProbabilityFloor);
      model.notes_.push_back("gbm: location " + std::to_string(t) +
                             " subsample too small; constant mean");
      continue;
    }

    EncodedRows enc = encode_rows(map, data.records, idx);
    trees::ColumnSet columns(std::move(enc.columns));
    trees::TreeParams params;
    params.max_depth = cfg.depth;
    params.min_leaf_weight = cfg.min_leaf;
    params.features_per_split = 0;

    lf.value = logit(clamp01(mean, kProbabilityFloor));
    std::vector<double> score(static_cast<std::size_t>(nt), lf.value);
    std::vector<double> residual(static_cast<std::size_t>(nt));
    std::vector<double> hessian(static_cast<std::size_t>(nt));
    std::vector<double> ones(static_cast<std::size_t>(nt), 1.0);
    rng::Rng loc_rng = root.child("location", static_cast<std::uint64_t>(t));
    lf.forest.trees.reserve(static_cast<std::size_t>(cfg.trees));
    for (int k = 0; k < cfg.trees; ++k) {
      for (int i = 0; i < nt; ++i) {
        auto u = static_cast<std::size_t>(i);
        double p = sigmoid(score[u]);
        residual[u] = yt[u] - p;
        hessian[u] = p * (1.0 - p);
      }
      trees::TreeData tdata{residual, ones, residual, hessian, ones};
      trees::RegressionTree tree =
          trees::build_tree(columns, tdata, params, loc_rng);
      for (auto& node : tree.nodes())
        node.value = std::clamp(node.value, -kMaxLeafStep, kMaxLeafStep);
      for (int i = 0; i < nt; ++i)
        score[static_cast<std::size_t>(i)] +=
            cfg.learning_rate * tree.predict(enc.row(i));
      lf.forest.trees.push_back(std::move(tree));
    }
  }
  return model;
}

std::unique_ptr<OutcomeModel> fit_model(const tabular::Dataset& train,
                                        const TrainConfig& config) {
  TrainConfig cfg = config.resolved();
  train.validate();
  switch (cfg.family) {
    case Family::ols: {
      auto map = tabular::FeatureMap::fit(train.schema, train.records,
                                          tabular::FeatureMode::interactions,
                                          train.num_locations);
      return std::make_unique<LinearModel>(fit_ols(train, map));
    }
    case Family::ridge: {
      if (!(cfg.lambda > 0.0)) fail("ridge: requires a positive lambda");
      auto map = tabular::FeatureMap::fit(train.schema, train.records,
                                          tabular::FeatureMode::interactions,
                                          train.num_locations);
      return std::make_unique<LinearModel>(fit_ridge(train, map, cfg.lambda));
    }
    case Family::lasso_logit: {
      auto map = tabular::FeatureMap::fit(train.schema, train.records,
                                          tabular::FeatureMode::interactions,
                                          train.num_locations);
      return std::make_unique<LassoLogitModel>(
          fit_lasso_logit(train, map, cfg));
    }
    case Family::honest_rf: {
      auto map = tabular::FeatureMap::fit(
          train.schema, train.records, tabular::FeatureMode::covariates_only,
          train.num_locations);
      return std::make_unique<HonestForestModel>(
          fit_honest_rf(train, map, cfg));
    }
    case Family::gbm: {
      auto map = tabular::FeatureMap::fit(
          train.schema, train.records, tabular::FeatureMode::covariates_only,
          train.num_locations);
      return std::make_unique<GbmModel>(fit_gbm(train, map, cfg));
    }
  }
  fail("fit_model: unknown family");
}

std::unique_ptr<OutcomeModel> load_model(std::istream& is) {
  std::string tag, name;
  int version = 0;
  if (!(is >> tag >> version) || tag != "model" || version != 1)
    fail("model load: bad header");
  if (!(is >> tag >> name) || tag != "family")
    fail("model load: bad family line");
  Family family = parse_family(name);
  tabular::FeatureMap map = tabular::FeatureMap::load(is);
  switch (family) {
    case Family::ols:
    case Family::ridge:
      return std::make_unique<LinearModel>(family, std::move(map),
                                           read_coefficients(is));
    case Family::lasso_logit: {
      auto model = std::make_unique<LassoLogitModel>();
      model->map_ = std::move(map);
      std::string key;
      if (!(is >> key >> model->lambda_) || key != "lambda")
        fail("model load: bad lambda line");
      if (!(is >> key >> model->intercept_) || key != "intercept")
        fail("model load: bad intercept line");
      model->coefficients_ = read_coefficients(is);
      if (static_cast<int>(model->coefficients_.size()) !=
          model->map_.dimension())
        fail("model load: coefficient count mismatch");
      return model;
    }
    case Family::honest_rf: {
      auto model = std::make_unique<HonestForestModel>();
      model->map_ = std::move(map);
      model->locations_ = load_location_forests(is);
      return model;
    }
    case Family::gbm: {
      auto model = std::make_unique<GbmModel>();
      model->map_ = std::move(map);
      std::string key;
      if (!(is >> key >> model->learning_rate_) || key != "learning_rate")
        fail("model load: bad learning_rate line");
      model->locations_ = load_location_forests(is);
      return model;
    }
  }
  fail("model load: unknown family");
}

std::vector<std::vector<double>> score_matrix(
    const OutcomeModel& model,
    const std::vector<tabular::RefugeeRecord>& records, int threads) {
  int L = model.num_locations();
  if (L <= 0) fail("score_matrix: model has no location dimension");
  std::vector<std::vector<double>> scores(
      records.size(), std::vector<double>(static_cast<std::size_t>(L)));
  parallel_for(static_cast<int>(records.size()), threads, [&](int i) {
    auto u = static_cast<std::size_t>(i);
    model.predict_all(records[u], scores[u]);
  });
  return scores;
}

}  // namespace curselab::learners
