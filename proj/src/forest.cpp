#include "vfa/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vfa/errors.hpp"
#include "vfa/rng.hpp"

namespace vfa {

std::array<double, kForestFeatures> vertebra_features(const RatioProfile& r) {
  return {r.h_a, r.h_m, r.h_p, r.apr, r.mpr, r.mar};
}

namespace {

using Sample = std::array<double, kForestFeatures>;

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

struct SplitResult {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

// Best Gini split over a feature subset; thresholds are midpoints between
// consecutive distinct values, sample goes left when x < threshold.
SplitResult best_split(const std::vector<Sample>& features, const std::vector<int>& labels,
                       const std::vector<int>& idx, const std::vector<int>& feature_pick,
                       int n_classes, int min_leaf) {
  SplitResult best;
  const int n = static_cast<int>(idx.size());
  std::vector<std::pair<double, int>> vals(n);
  for (int f : feature_pick) {
    for (int i = 0; i < n; ++i) vals[i] = {features[idx[i]][f], labels[idx[i]]};
    std::sort(vals.begin(), vals.end());
    std::vector<int> left_counts(n_classes, 0), right_counts(n_classes, 0);
    for (int i = 0; i < n; ++i) ++right_counts[vals[i].second];
    int n_left = 0;
    for (int i = 0; i + 1 < n; ++i) {
      ++left_counts[vals[i].second];
      --right_counts[vals[i].second];
      ++n_left;
      if (vals[i].first == vals[i + 1].first) continue;
      if (n_left < min_leaf || n - n_left < min_leaf) continue;
      const double imp = (n_left * gini(left_counts, n_left) +
                          (n - n_left) * gini(right_counts, n - n_left)) /
                         n;
      if (!best.found || imp < best.impurity) {
        best.found = true;
        best.feature = f;
        best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
        best.impurity = imp;
      }
    }
  }
  return best;
}

int grow(FeatureForest::Tree& tree, const std::vector<Sample>& features,
         const std::vector<int>& labels, const std::vector<int>& idx, int depth,
         int n_classes, const ForestConfig& cfg, Rng& rng) {
  std::vector<int> counts(n_classes, 0);
  for (int i : idx) ++counts[labels[i]];

  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  const bool pure = *std::max_element(counts.begin(), counts.end()) ==
                    static_cast<int>(idx.size());
  SplitResult split;
  if (depth < cfg.max_depth && !pure && static_cast<int>(idx.size()) >= 2 * cfg.min_leaf) {
    std::vector<int> all(kForestFeatures);
    std::iota(all.begin(), all.end(), 0);
    // Draw the feature subset without replacement.
    std::vector<int> pick;
    for (int k = 0; k < cfg.features_per_split && !all.empty(); ++k) {
      const int j = rng.uniform_int(0, static_cast<int>(all.size()) - 1);
      pick.push_back(all[j]);
      all.erase(all.begin() + j);
    }
    std::sort(pick.begin(), pick.end());
    split = best_split(features, labels, idx, pick, n_classes, cfg.min_leaf);
  }

  if (!split.found) {
    FeatureForest::Node& leaf = tree.nodes[node_id];
    leaf.dist.assign(n_classes, 0.0);
    for (int c = 0; c < n_classes; ++c)
      leaf.dist[c] = static_cast<double>(counts[c]) / static_cast<double>(idx.size());
    return node_id;
  }

  std::vector<int> left, right;
  for (int i : idx) {
    if (features[i][split.feature] < split.threshold)
      left.push_back(i);
    else
      right.push_back(i);
  }
  const int l = grow(tree, features, labels, left, depth + 1, n_classes, cfg, rng);
  const int r = grow(tree, features, labels, right, depth + 1, n_classes, cfg, rng);
  FeatureForest::Node& node = tree.nodes[node_id];
  node.feature = split.feature;
  node.threshold = split.threshold;
  node.left = l;
  node.right = r;
  return node_id;
}

}  // namespace

void FeatureForest::fit(const std::vector<Sample>& features, const std::vector<int>& labels,
                        int n_classes, const ForestConfig& cfg) {
  if (features.size() != labels.size()) throw MismatchedSets("features/labels size mismatch");
  if (n_classes < 2) throw InputError("forest needs at least two classes");
  std::vector<int> counts(n_classes, 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw InputError("label outside class range");
    ++counts[l];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[c] > 0 && counts[c] < 10)
      throw InsufficientData("class '" + std::to_string(c) + "' has fewer than 10 samples");
  }
  if (features.empty()) throw InsufficientData("empty training set");

  n_classes_ = n_classes;
  trees_.clear();
  trees_.reserve(cfg.trees);
  const int n = static_cast<int>(features.size());
  for (int t = 0; t < cfg.trees; ++t) {
    Tree tree;
    tree.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    Rng rng(tree.seed);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = rng.uniform_int(0, n - 1);  // bootstrap
    grow(tree, features, labels, idx, 0, n_classes, cfg, rng);
    trees_.push_back(std::move(tree));
  }
}

std::vector<double> FeatureForest::predict_proba(const Sample& x) const {
  if (trees_.empty()) throw InputError("forest is not fitted");
  std::vector<double> probs(n_classes_, 0.0);
  for (const Tree& tree : trees_) {
    int node = 0;
    while (tree.nodes[node].feature >= 0)
      node = x[tree.nodes[node].feature] < tree.nodes[node].threshold
                 ? tree.nodes[node].left
                 : tree.nodes[node].right;
    for (int c = 0; c < n_classes_; ++c) probs[c] += tree.nodes[node].dist[c];
  }
  for (double& p : probs) p /= static_cast<double>(trees_.size());
  return probs;
}

int FeatureForest::predict(const Sample& x) const {
  const std::vector<double> p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace vfa
