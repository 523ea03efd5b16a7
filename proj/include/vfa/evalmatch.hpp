#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfa/geometry.hpp"
#include "vfa/gsq.hpp"

namespace vfa {

// Center-size box, the internal format; corner format is converted at the
// file boundary.
struct BoundingBox {
  double cx = 0.0, cy = 0.0, w = 1.0, h = 1.0;

  static BoundingBox from_corners(double x1, double y1, double x2, double y2);
  double area() const { return w * h; }
  double x1() const { return cx - w / 2.0; }
  double y1() const { return cy - h / 2.0; }
  double x2() const { return cx + w / 2.0; }
  double y2() const { return cy + h / 2.0; }
  void validate() const;  // finite, positive extent
};

double iou(const BoundingBox& a, const BoundingBox& b);

// IoU minus the enclosing-box penalty; in (-1, 1], 1 iff identical.
double giou(const BoundingBox& a, const BoundingBox& b);

struct Detection {
  BoundingBox box;
  double score = 1.0;   // object probability
  double weight = 1.0;  // 1e-3 for boxes built from imputed keypoints
};

struct DetectionSet {
  std::vector<Detection> items;
};

struct Assignment {
  std::vector<int> row_to_col;  // -1 for unassigned rows
  double total_cost = 0.0;
};

// Optimal min-cost one-to-one assignment of min(n, m) pairs
// (Jonker-Volgenant style shortest augmenting paths, O(n^2 m)).
Assignment hungarian_match(const std::vector<std::vector<double>>& cost);

struct DetectionLossOptions {
  double lambda_iou = 2.0;
  double lambda_l1 = 5.0;
  double object_threshold = 0.5;  // predicted-object gate for the box terms
};

struct DetectionLossPair {
  int truth = -1;
  int pred = -1;
  double class_nll = 0.0;
  double giou_loss = 0.0;  // 1 - giou
  double l1 = 0.0;         // |b - bhat|_1 over (cx, cy, w, h)
  bool box_gated = false;  // true when the box terms were omitted
  double weighted_total = 0.0;
};

struct DetectionLossResult {
  double total = 0.0;
  std::vector<DetectionLossPair> pairs;
};

// Hungarian-matched detection loss: per matched pair, class NLL plus
// lambda-weighted GIoU and l1 box terms; box terms apply only when the
// prediction scores as an object. Each pair is scaled by its ground-truth
// weight. The matching cost uses the identical per-pair expression without
// the truth weight.
DetectionLossResult detection_loss(const DetectionSet& pred, const DetectionSet& truth,
                                   const DetectionLossOptions& opt = {});

// Trapezoidal ROC area == pairwise concordance with half credit for ties.
// Labels are 0/1; throws SingleClass when only one label value is present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct YoudenPoint {
  double threshold = 0.0;  // predict positive when score >= threshold
  double sensitivity = 0.0;
  double specificity = 0.0;
  double j = 0.0;
  double f1 = 0.0;
};

// Threshold maximizing sensitivity + specificity - 1; ties resolve toward
// higher sensitivity (the lower threshold).
YoudenPoint youden_point(const std::vector<double>& scores, const std::vector<int>& labels);

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<int>> counts;
  std::vector<std::vector<double>> rows;  // row-normalized; all-zero when absent
  std::vector<bool> row_present;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          const std::vector<std::string>& classes);

// Patient grade = maximum vertebra grade.
Grade aggregate_patient(const std::vector<Grade>& vertebra_grades);

struct ReaderAgreement {
  double mean_px = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  int points = 0;
};

// Mean per-point Euclidean deviation between two matched keypoint sets,
// with 5th/95th percentiles for comparison against model quantiles.
ReaderAgreement reader_agreement(const std::vector<VertebraKeypoints>& a,
                                 const std::vector<VertebraKeypoints>& b);

}  // namespace vfa
