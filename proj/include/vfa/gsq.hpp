#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "vfa/geometry.hpp"

namespace vfa {

enum class Grade : int { normal = 0, mild = 1, moderate = 2, severe = 3 };
enum class Morphology : int { normal = 0, wedge = 1, crush = 2, concave = 3 };

inline constexpr int kNumGrades = 4;
inline constexpr int kNumMorphologies = 4;

const char* to_string(Grade g);
const char* to_string(Morphology m);
Grade grade_from_string(const std::string& s);            // throws ParseError
Morphology morphology_from_string(const std::string& s);  // throws ParseError

// Severity order used for patient aggregation and merged views.
inline bool operator<(Grade a, Grade b) { return static_cast<int>(a) < static_cast<int>(b); }

// Height-loss thresholds of the semi-quantitative grading bands plus the
// sigmoid temperature of the fuzzy relaxation. Bands are closed on the
// left: a severity exactly at a threshold belongs to the more severe band.
//
// convex_graded selects how vertebrae with both ratios above 1 are graded:
// false treats them as normal (the textual rule), true includes the
// (mpr - 1) and (mar - 1) excesses in the severity max so the grade bands
// close into nested hexagons in the (MPR, MAR) plane.
struct GsqThresholds {
  double tol_normal = 0.20;
  double tol_mild = 0.25;
  double tol_moderate = 0.40;
  double tau = 0.02;
  bool convex_graded = false;

  void validate() const;  // 0 < tol_normal < tol_mild < tol_moderate < 1, tau > 0
};

enum class Provenance { crisp, fuzzy };

struct ClassPosterior {
  std::array<double, kNumGrades> grade{1.0, 0.0, 0.0, 0.0};
  std::array<double, kNumMorphologies> morphology{1.0, 0.0, 0.0, 0.0};
  Provenance provenance = Provenance::crisp;

  Grade grade_argmax() const;
  Morphology morphology_argmax() const;

  // Merged views: normal+mild vs moderate+severe, wedge-like = wedge+crush.
  double prob_moderate_or_severe() const { return grade[2] + grade[3]; }
  double prob_fractured() const { return grade[1] + grade[2] + grade[3]; }
  double prob_wedge_like() const { return morphology[1] + morphology[2]; }

  void validate() const;  // probabilities in [0,1], groups sum to 1 within 1e-9
};

ClassPosterior crisp_posterior(Grade g, Morphology m);

// d p(class) / d keypoint coordinate, rows indexed by class, columns by the
// flattened coordinate order of VertebraKeypoints::flat().
struct GradientRecord {
  std::array<std::array<double, 12>, kNumGrades> grade{};
  std::array<std::array<double, 12>, kNumMorphologies> morphology{};
  std::size_t tape_nodes = 0;
};

// --- crisp path ---

// s = max(1 - mpr, 1 - mar, |mpr - mar|, 0), plus (mpr - 1) and (mar - 1)
// when convex_graded is set. Zero for an undeformed vertebra; the band
// edges trace hexagons in the (MPR, MAR) plane.
double severity_score(const RatioProfile& r, const GsqThresholds& th);

Grade grade_from_severity(double s, const GsqThresholds& th);
Grade crisp_grade(const RatioProfile& r, const GsqThresholds& th);

// normal when s < tol_normal or both ratios >= 1 (convex rule); otherwise
// wedge (mpr<1, mar>1), crush (mpr>1, mar<1) or concave (mpr<1, mar<1).
// A ratio exactly 1 with s >= tol_normal resolves to concave if the other
// ratio is below 1, else normal.
Morphology crisp_morphology(const RatioProfile& r, const GsqThresholds& th);

// --- fuzzy (differentiable) path ---

// Comparisons become sigmoids at temperature tau, conjunction becomes min,
// disjunction max, and the severity max becomes a log-sum-exp at the same
// temperature. Raw group memberships are normalized by their sum + 1e-12.
struct FuzzyDetail {
  double soft_severity = 0.0;
  std::array<double, kNumGrades> grade_raw{};
  std::array<double, kNumMorphologies> morphology_raw{};
  ClassPosterior posterior;
};

FuzzyDetail fuzzy_detail(const RatioProfile& r, const GsqThresholds& th);
ClassPosterior fuzzy_memberships(const RatioProfile& r, const GsqThresholds& th);

// Raw band memberships for a given severity value (normal, mild, moderate,
// severe before normalization); a severity exactly at a threshold puts 1/2
// on both adjacent raw sigmoids.
std::array<double, kNumGrades> grade_memberships_from_severity(double s,
                                                               const GsqThresholds& th);

struct FuzzyGradientResult {
  ClassPosterior posterior;  // identical to the fuzzy_memberships composition
  GradientRecord gradients;
};

// Reverse-mode gradients of the fuzzy posterior with respect to the twelve
// keypoint coordinates. Ties inside min/max take the first argument's
// subgradient.
FuzzyGradientResult fuzzy_with_gradient(const VertebraKeypoints& kp,
                                        const GsqThresholds& th);

// --- separable posterior and loss ---

// Elementwise product renormalized to sum 1. Throws ClassMismatch on size
// difference, NumericError when the product vanishes everywhere.
std::vector<double> combine(const std::vector<double>& p, const std::vector<double>& q);

// Applies combine() to the grade and morphology groups.
ClassPosterior combine_posterior(const ClassPosterior& p_kps, const ClassPosterior& p_img);

struct CeItem {
  std::vector<double> p_kps;
  std::vector<double> p_img;  // empty when no image posterior is available
  int true_class = 0;
};

struct CeGradients {
  std::vector<std::vector<double>> d_p_kps;
  std::vector<std::vector<double>> d_p_img;
};

// Weighted cross-entropy over a batch: for each item only the true class
// contributes, weighted by class_weights[true_class]. Either log term is
// dropped when its lambda is zero; probabilities are clamped below at
// 1e-12 before the log.
double weighted_ce_loss(const std::vector<CeItem>& batch,
                        const std::vector<double>& class_weights, double lambda_kps,
                        double lambda_img, CeGradients* gradients = nullptr);

// w_c proportional to 1/count_c, scaled so the mean weight over classes
// with nonzero count is 1; zero-count classes get weight 0.
std::vector<double> inverse_frequency_weights(const std::vector<int>& class_counts);

}  // namespace vfa
