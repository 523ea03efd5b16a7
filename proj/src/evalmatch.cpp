#include "vfa/evalmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vfa {

BoundingBox BoundingBox::from_corners(double x1, double y1, double x2, double y2) {
  BoundingBox b;
  b.cx = (x1 + x2) / 2.0;
  b.cy = (y1 + y2) / 2.0;
  b.w = x2 - x1;
  b.h = y2 - y1;
  return b;
}

void BoundingBox::validate() const {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h))
    throw InputError("non-finite bounding box");
  if (!(w > 0.0) || !(h > 0.0)) throw InputError("bounding box must have positive extent");
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double giou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  const double ex = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double ey = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
  const double enclose = ex * ey;
  return inter / uni - (enclose - uni) / enclose;
}

Assignment hungarian_match(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != m) throw InputError("ragged cost matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw InputError("non-finite assignment cost");
  }
  if (m == 0) return {std::vector<int>(n, -1), 0.0};

  // Shortest-augmenting-path assignment over the smaller side.
  const bool transposed = n > m;
  const int rows = transposed ? m : n;
  const int cols = transposed ? n : m;
  auto at = [&](int r, int c) { return transposed ? cost[c][r] : cost[r][c]; };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> match(cols + 1, 0);  // 1-based row matched to each column
  std::vector<int> way(cols + 1, 0);

  for (int i = 1; i <= rows; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  Assignment out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= cols; ++j) {
    if (match[j] == 0) continue;
    const int r = match[j] - 1;
    const int c = j - 1;
    if (transposed)
      out.row_to_col[c] = r;
    else
      out.row_to_col[r] = c;
  }
  for (int r = 0; r < n; ++r)
    if (out.row_to_col[r] >= 0) out.total_cost += cost[r][out.row_to_col[r]];
  return out;
}

namespace {

constexpr double kProbFloor = 1e-12;

double pair_class_nll(double score) { return -std::log(std::max(score, kProbFloor)); }

double box_l1(const BoundingBox& a, const BoundingBox& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

}  // namespace

DetectionLossResult detection_loss(const DetectionSet& pred, const DetectionSet& truth,
                                   const DetectionLossOptions& opt) {
  if (truth.items.empty()) throw EmptyTruth("detection_loss: no ground-truth boxes");
  for (const Detection& d : truth.items) {
    d.box.validate();
    if (!(d.weight > 0.0)) throw InputError("truth weight must be positive");
  }
  for (const Detection& d : pred.items) {
    d.box.validate();
    if (d.score < 0.0 || d.score > 1.0) throw InputError("score outside [0,1]");
  }

  DetectionLossResult out;
  if (pred.items.empty()) return out;

  const int n = static_cast<int>(truth.items.size());
  const int m = static_cast<int>(pred.items.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(m));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const Detection& t = truth.items[i];
      const Detection& p = pred.items[j];
      double c = pair_class_nll(p.score);
      if (p.score >= opt.object_threshold)
        c += opt.lambda_iou * (1.0 - giou(t.box, p.box)) + opt.lambda_l1 * box_l1(t.box, p.box);
      cost[i][j] = c;
    }
  }

  const Assignment assign = hungarian_match(cost);
  for (int i = 0; i < n; ++i) {
    const int j = assign.row_to_col[i];
    if (j < 0) continue;
    const Detection& t = truth.items[i];
    const Detection& p = pred.items[j];
    DetectionLossPair pair;
    pair.truth = i;
    pair.pred = j;
    pair.class_nll = pair_class_nll(p.score);
    pair.box_gated = p.score < opt.object_threshold;
    double term = pair.class_nll;
    if (!pair.box_gated) {
      pair.giou_loss = 1.0 - giou(t.box, p.box);
      pair.l1 = box_l1(t.box, p.box);
      term += opt.lambda_iou * pair.giou_loss + opt.lambda_l1 * pair.l1;
    }
    pair.weighted_total = t.weight * term;
    out.total += pair.weighted_total;
    out.pairs.push_back(pair);
  }
  return out;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw MismatchedSets("scores/labels size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw SingleClass("roc_auc requires both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks; ties get the average rank, which yields half concordance credit.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) pos_rank_sum += midrank;
    i = j + 1;
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

YoudenPoint youden_point(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw MismatchedSets("scores/labels size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw SingleClass("youden_point requires both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Candidate thresholds: +inf (nothing positive) and every distinct score,
  // scanned descending with cumulative counts. Predict positive when
  // score >= threshold. Equal J resolves to the larger tp, i.e. the lower
  // threshold / higher sensitivity.
  double best_j = 0.0;
  std::size_t best_tp = 0, best_fp = 0;
  double best_threshold = std::numeric_limits<double>::infinity();

  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0)
        ++tp;
      else
        ++fp;
    }
    const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double spec = static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
    const double jstat = sens + spec - 1.0;
    if (jstat > best_j || (jstat == best_j && tp > best_tp)) {
      best_j = jstat;
      best_tp = tp;
      best_fp = fp;
      best_threshold = scores[order[i]];
    }
    i = j + 1;
  }

  YoudenPoint out;
  out.threshold = best_threshold;
  out.sensitivity = static_cast<double>(best_tp) / static_cast<double>(n_pos);
  out.specificity = static_cast<double>(n_neg - best_fp) / static_cast<double>(n_neg);
  out.j = best_j;
  const std::size_t fn = n_pos - best_tp;
  const double denom = 2.0 * best_tp + best_fp + fn;
  out.f1 = denom > 0.0 ? 2.0 * best_tp / denom : 0.0;
  return out;
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          const std::vector<std::string>& classes) {
  if (truth.size() != pred.size()) throw MismatchedSets("truth/pred size mismatch");
  const int k = static_cast<int>(classes.size());
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(k, std::vector<int>(k, 0));
  cm.rows.assign(k, std::vector<double>(k, 0.0));
  cm.row_present.assign(k, false);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || pred[i] < 0 || pred[i] >= k)
      throw InputError("label outside class set");
    ++cm.counts[truth[i]][pred[i]];
  }
  for (int r = 0; r < k; ++r) {
    const int row_sum = std::accumulate(cm.counts[r].begin(), cm.counts[r].end(), 0);
    if (row_sum == 0) continue;  // absent row, reported as such rather than NaN
    cm.row_present[r] = true;
    for (int c = 0; c < k; ++c)
      cm.rows[r][c] = static_cast<double>(cm.counts[r][c]) / row_sum;
  }
  return cm;
}

Grade aggregate_patient(const std::vector<Grade>& vertebra_grades) {
  if (vertebra_grades.empty()) throw EmptyPatient("patient has no vertebrae");
  Grade worst = Grade::normal;
  for (Grade g : vertebra_grades)
    if (worst < g) worst = g;
  return worst;
}

ReaderAgreement reader_agreement(const std::vector<VertebraKeypoints>& a,
                                 const std::vector<VertebraKeypoints>& b) {
  if (a.size() != b.size()) throw MismatchedSets("reader sets differ in vertebra count");
  std::vector<double> dev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int l = 0; l < kNumLandmarks; ++l) {
      if (a[i].present[l] != b[i].present[l])
        throw MismatchedSets("reader sets differ in keypoint presence");
      if (!a[i].present[l]) continue;
      const double dx = a[i].pts[l].x - b[i].pts[l].x;
      const double dy = a[i].pts[l].y - b[i].pts[l].y;
      dev.push_back(std::sqrt(dx * dx + dy * dy));
    }
  }
  if (dev.empty()) throw MismatchedSets("no matched keypoints");
  ReaderAgreement out;
  out.points = static_cast<int>(dev.size());
  out.mean_px = std::accumulate(dev.begin(), dev.end(), 0.0) / dev.size();
  std::sort(dev.begin(), dev.end());
  const auto q = [&](double p) {
    const double pos = p * (static_cast<double>(dev.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= dev.size()) return dev.back();
    const double f = pos - static_cast<double>(lo);
    return dev[lo] * (1.0 - f) + dev[lo + 1] * f;
  };
  out.p5 = q(0.05);
  out.p95 = q(0.95);
  return out;
}

}  // namespace vfa
