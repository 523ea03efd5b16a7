#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vfa/geometry.hpp"

namespace vfa {

// Feature vector order used by the forest baseline: h_a, h_m, h_p, APR,
// MPR, MAR.
inline constexpr int kForestFeatures = 6;
std::array<double, kForestFeatures> vertebra_features(const RatioProfile& r);

struct ForestConfig {
  int trees = 100;
  int max_depth = 2;
  int features_per_split = 2;  // floor(sqrt(6))
  int min_leaf = 1;
  std::uint64_t seed = 0;
};

// Bootstrap-bagged axis-aligned trees, Gini split criterion, per-split
// feature subsampling; prediction is the mean of the tree leaf class
// distributions. Deterministic under the config seed (one derived seed per
// tree).
class FeatureForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> dist;  // leaf class distribution
  };
  struct Tree {
    std::vector<Node> nodes;
    std::uint64_t seed = 0;
  };

  // Requires at least 10 samples of every class present in `labels`.
  void fit(const std::vector<std::array<double, kForestFeatures>>& features,
           const std::vector<int>& labels, int n_classes, const ForestConfig& cfg = {});

  std::vector<double> predict_proba(const std::array<double, kForestFeatures>& x) const;
  int predict(const std::array<double, kForestFeatures>& x) const;

  const std::vector<Tree>& trees() const { return trees_; }
  int n_classes() const { return n_classes_; }

 private:
  std::vector<Tree> trees_;
  int n_classes_ = 0;
};

}  // namespace vfa
