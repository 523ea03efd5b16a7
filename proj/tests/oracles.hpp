#pragma once

// Test-only oracles, deliberately independent of the library
// implementations they check: brute-force assignment, pairwise-concordance
// AUC, exhaustive Youden sweep, and central finite differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

// Exhaustive minimum-cost assignment of min(n, m) pairs.
inline double brute_force_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = n ? static_cast<int>(cost[0].size()) : 0;
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, unsigned, double)> rec = [&](int row, unsigned used, double acc) {
    const int remaining_rows = n - row;
    const int remaining_cols = m - static_cast<int>(__builtin_popcount(used));
    if (row == n || remaining_cols == 0) {
      // All assignable pairs placed only if we've used min(n, m) pairs.
      const int placed = static_cast<int>(__builtin_popcount(used));
      if (placed == std::min(n, m)) best = std::min(best, acc);
      return;
    }
    // Option: leave this row unassigned (only allowed if rows exceed cols).
    if (remaining_rows > remaining_cols) rec(row + 1, used, acc);
    for (int c = 0; c < m; ++c) {
      if (used & (1u << c)) continue;
      rec(row + 1, used | (1u << c), acc + cost[row][c]);
    }
  };
  rec(0, 0u, 0.0);
  return best;
}

// Pairwise concordance with half credit for ties.
inline double concordance_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  double num = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

struct SweepPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double j = 0.0;
  double f1 = 0.0;
};

// Exhaustive sweep over every distinct score plus +inf, recomputing the
// confusion counts from scratch per candidate (predict positive when
// score >= threshold); ties toward higher sensitivity.
inline SweepPoint youden_sweep(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
  std::vector<double> cands = scores;
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  cands.push_back(std::numeric_limits<double>::infinity());

  long long n_pos = 0, n_neg = 0;
  for (int l : labels) (l != 0 ? n_pos : n_neg) += 1;

  SweepPoint best;
  best.threshold = std::numeric_limits<double>::infinity();
  bool have = false;
  for (double t : cands) {
    long long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] != 0 ? tp : fp) += 1;
    }
    const double sens = static_cast<double>(tp) / n_pos;
    const double spec = static_cast<double>(n_neg - fp) / n_neg;
    const double j = sens + spec - 1.0;
    if (!have || j > best.j || (j == best.j && sens > best.sensitivity)) {
      const long long fn = n_pos - tp;
      best.threshold = t;
      best.sensitivity = sens;
      best.specificity = spec;
      best.j = j;
      best.f1 = (2.0 * tp + fp + fn) > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
      have = true;
    }
  }
  return best;
}

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double step = 1e-5) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

// Relative error with a unit floor, so near-zero entries compare absolutely.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace oracles
