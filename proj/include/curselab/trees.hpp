#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "curselab/rng.hpp"

namespace curselab::trees {

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class RegressionTree {
 public:
  /// Routing rule: go left when x[feature] < threshold. Thresholds are stored
  /// as the smallest feature value of the right branch, so routing needs no
  /// midpoint arithmetic and is exact for values seen in training.
  double predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& nodes() { return nodes_; }

  void save(std::ostream& os) const;
  static RegressionTree load(std::istream& is);

 private:
  std::vector<Node> nodes_;
};

/// Feature columns presorted once and shared by every tree grown on the same
/// rows; individual trees vary only their per-row weights.
class ColumnSet {
 public:
  explicit ColumnSet(std::vector<std::vector<double>> columns);
  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(columns_.size()); }
  double value(int col, int row) const {
    return columns_[static_cast<std::size_t>(col)][static_cast<std::size_t>(row)];
  }
  const std::vector<int>& order(int col) const {
    return order_[static_cast<std::size_t>(col)];
  }

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<int>> order_;
  int rows_ = 0;
};

/// Per-row inputs of one tree build. The split criterion is weighted
/// variance reduction of `split_num` under `split_weight`; leaf values are
/// sum(value_weight * value_num) / sum(value_weight * value_den) over the
/// rows reaching the leaf, falling back to the parent value when the
/// denominator vanishes (e.g. an honest leaf that captured no estimation
/// rows). Plain regression uses num = y, den = 1 and equal split/value
/// weights; honest trees use disjoint weights; boosting stages use gradient
/// numerators and hessian denominators.
struct TreeData {
  std::span<const double> split_num;
  std::span<const double> split_weight;
  std::span<const double> value_num;
  std::span<const double> value_den;
  std::span<const double> value_weight;
};

struct TreeParams {
  int max_depth = 8;
  double min_leaf_weight = 1.0;  // minimum split weight on each side
  int features_per_split = 0;    // 0 means all features
};

/// Grows one tree. Splits are exact (every boundary between distinct values
/// is a candidate); ties in gain resolve to the lowest feature index, then
/// the lowest threshold, by scan order. `rng` drives per-node feature
/// subsampling and is the only source of randomness.
RegressionTree build_tree(const ColumnSet& columns, const TreeData& data,
                          const TreeParams& params, rng::Rng& rng);

/// Draws bootstrap multiplicities: n samples with replacement over [0, n).
std::vector<double> bootstrap_counts(int n, rng::Rng& rng);

struct ForestParams {
  int trees = 200;
  TreeParams tree;
};

/// Bagged regression forest; prediction is the mean over trees.
class Forest {
 public:
  std::vector<RegressionTree> trees;
  double predict(std::span<const double> x) const;
  void save(std::ostream& os) const;
  static Forest load(std::istream& is);
};

Forest fit_forest(const ColumnSet& columns, std::span<const double> y,
                  const ForestParams& params, const rng::Rng& rng);

}  // namespace curselab::trees
