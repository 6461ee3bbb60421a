#include "curselab/trees.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "curselab/common.hpp"

namespace curselab::trees {

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) fail("RegressionTree::predict: empty tree");
  int k = 0;
  while (true) {
    const Node& n = nodes_[static_cast<std::size_t>(k)];
    if (n.feature < 0) return n.value;
    k = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
}

void RegressionTree::save(std::ostream& os) const {
  os << "tree " << nodes_.size() << '\n';
  for (const Node& n : nodes_)
    os << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left
       << ' ' << n.right << ' ' << format_double(n.value) << '\n';
}

RegressionTree RegressionTree::load(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "tree")
    fail("RegressionTree::load: bad header");
  RegressionTree t;
  t.nodes_.resize(count);
  for (auto& n : t.nodes_)
    if (!(is >> n.feature >> n.threshold >> n.left >> n.right >> n.value))
      fail("RegressionTree::load: truncated node list");
  return t;
}

ColumnSet::ColumnSet(std::vector<std::vector<double>> columns)
    : columns_(std::move(columns)) {
  if (columns_.empty()) fail("ColumnSet: no columns");
  rows_ = static_cast<int>(columns_[0].size());
  for (const auto& c : columns_)
    if (static_cast<int>(c.size()) != rows_) fail("ColumnSet: ragged columns");
  order_.resize(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    auto& ord = order_[j];
    ord.resize(static_cast<std::size_t>(rows_));
    std::iota(ord.begin(), ord.end(), 0);
    const auto& col = columns_[j];
    // Stable order: by value, then by row index, so every tree sees the same
    // scan sequence.
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
      double va = col[static_cast<std::size_t>(a)];
      double vb = col[static_cast<std::size_t>(b)];
      if (va != vb) return va < vb;
      return a < b;
    });
  }
}

namespace {

struct BuildContext {
  const ColumnSet* cols;
  const TreeData* data;
  const TreeParams* params;
  rng::Rng* rng;
  std::vector<RegressionTree>* unused = nullptr;
  std::vector<Node>* nodes;
  std::vector<int> feature_scratch;
};

struct BestSplit {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

/// lists[j] holds the node's rows in column-j sorted order.
int build_node(BuildContext& ctx, std::vector<std::vector<int>>& lists,
               int depth, double parent_value) {
  const TreeData& d = *ctx.data;
  const auto& rows = lists[0];

  double sw = 0.0, swy = 0.0;
  double vnum = 0.0, vden = 0.0;
  for (int r : rows) {
    auto u = static_cast<std::size_t>(r);
    sw += d.split_weight[u];
    swy += d.split_weight[u] * d.split_num[u];
    vnum += d.value_weight[u] * d.value_num[u];
    vden += d.value_weight[u] * d.value_den[u];
  }
  double value = vden > 1e-12 ? vnum / vden : parent_value;

  auto make_leaf = [&]() {
    ctx.nodes->push_back({-1, 0.0, -1, -1, value});
    return static_cast<int>(ctx.nodes->size()) - 1;
  };

  const TreeParams& p = *ctx.params;
  if (depth >= p.max_depth || sw < 2.0 * p.min_leaf_weight) return make_leaf();

  // Feature subset for this node.
  int m = ctx.cols->cols();
  auto& feats = ctx.feature_scratch;
  feats.resize(static_cast<std::size_t>(m));
  std::iota(feats.begin(), feats.end(), 0);
  int take = p.features_per_split > 0 && p.features_per_split < m
                 ? p.features_per_split
                 : m;
  if (take < m) {
    for (int k = 0; k < take; ++k) {
      auto j = static_cast<std::size_t>(
          ctx.rng->uniform_int(static_cast<std::uint64_t>(m - k)));
      std::swap(feats[static_cast<std::size_t>(k)],
                feats[static_cast<std::size_t>(k) + j]);
    }
    std::sort(feats.begin(), feats.begin() + take);
  }

  BestSplit best;
  for (int fi = 0; fi < take; ++fi) {
    int f = feats[static_cast<std::size_t>(fi)];
    const auto& list = lists[static_cast<std::size_t>(f)];
    double lw = 0.0, lwy = 0.0;
    for (std::size_t k = 0; k + 1 < list.size(); ++k) {
      auto u = static_cast<std::size_t>(list[k]);
      lw += d.split_weight[u];
      lwy += d.split_weight[u] * d.split_num[u];
      double here = ctx.cols->value(f, list[k]);
      double next = ctx.cols->value(f, list[k + 1]);
      if (here == next) continue;
      double rw = sw - lw;
      if (lw < p.min_leaf_weight || rw < p.min_leaf_weight) continue;
      double rwy = swy - lwy;
      double gain = lwy * lwy / lw + rwy * rwy / rw - swy * swy / sw;
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.feature = f;
        best.threshold = next;  // route: x < next goes left
      }
    }
  }
  if (best.feature < 0) return make_leaf();

  // Partition every column list, preserving sort order.
  std::vector<std::vector<int>> left_lists(lists.size());
  std::vector<std::vector<int>> right_lists(lists.size());
  for (std::size_t j = 0; j < lists.size(); ++j) {
    for (int r : lists[j]) {
      if (ctx.cols->value(best.feature, r) < best.threshold)
        left_lists[j].push_back(r);
      else
        right_lists[j].push_back(r);
    }
    lists[j].clear();
    lists[j].shrink_to_fit();
  }

  int self = static_cast<int>(ctx.nodes->size());
  ctx.nodes->push_back({best.feature, best.threshold, -1, -1, value});
  int left = build_node(ctx, left_lists, depth + 1, value);
  int right = build_node(ctx, right_lists, depth + 1, value);
  (*ctx.nodes)[static_cast<std::size_t>(self)].left = left;
  (*ctx.nodes)[static_cast<std::size_t>(self)].right = right;
  return self;
}

}  // namespace

RegressionTree build_tree(const ColumnSet& columns, const TreeData& data,
                          const TreeParams& params, rng::Rng& rng) {
  auto n = static_cast<std::size_t>(columns.rows());
  if (data.split_num.size() != n || data.split_weight.size() != n ||
      data.value_num.size() != n || data.value_den.size() != n ||
      data.value_weight.size() != n)
    fail("build_tree: data arrays must match the column row count");

  // Seed lists: rows that carry split or value weight, in presorted order.
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(columns.cols()));
  for (int j = 0; j < columns.cols(); ++j) {
    for (int r : columns.order(j)) {
      auto u = static_cast<std::size_t>(r);
      if (data.split_weight[u] > 0.0 || data.value_weight[u] > 0.0)
        lists[static_cast<std::size_t>(j)].push_back(r);
    }
  }
  if (lists[0].empty()) fail("build_tree: no rows with positive weight");

  RegressionTree tree;
  BuildContext ctx{&columns, &data, &params, &rng, nullptr, &tree.nodes(), {}};
  // The root's fallback is the plain split-weighted mean, in case no row has
  // value weight at all.
  double sw = 0.0, swy = 0.0;
  for (int r : lists[0]) {
    auto u = static_cast<std::size_t>(r);
    sw += data.split_weight[u];
    swy += data.split_weight[u] * data.split_num[u];
  }
  build_node(ctx, lists, 0, sw > 0.0 ? swy / sw : 0.0);
  return tree;
}

std::vector<double> bootstrap_counts(int n, rng::Rng& rng) {
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    counts[rng.uniform_int(static_cast<std::uint64_t>(n))] += 1.0;
  return counts;
}

double Forest::predict(std::span<const double> x) const {
  if (trees.empty()) fail("Forest::predict: empty forest");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

void Forest::save(std::ostream& os) const {
  os << "forest " << trees.size() << '\n';
  for (const auto& t : trees) t.save(os);
}

Forest Forest::load(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "forest")
    fail("Forest::load: bad header");
  Forest f;
  f.trees.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    f.trees.push_back(RegressionTree::load(is));
  return f;
}

Forest fit_forest(const ColumnSet& columns, std::span<const double> y,
                  const ForestParams& params, const rng::Rng& rng) {
  if (params.trees <= 0) fail("fit_forest: tree count must be positive");
  auto n = static_cast<std::size_t>(columns.rows());
  if (y.size() != n) fail("fit_forest: response length mismatch");
  std::vector<double> ones(n, 1.0);
  Forest forest;
  forest.trees.reserve(static_cast<std::size_t>(params.trees));
  for (int k = 0; k < params.trees; ++k) {
    rng::Rng tree_rng = rng.child("tree", static_cast<std::uint64_t>(k));
    auto counts = bootstrap_counts(static_cast<int>(n), tree_rng);
    TreeData data{y, counts, y, ones, counts};
    forest.trees.push_back(build_tree(columns, data, params.tree, tree_rng));
  }
  return forest;
}

}  // namespace curselab::trees
