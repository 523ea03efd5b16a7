#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vfa/geometry.hpp"
#include "vfa/gsq.hpp"

namespace vfa {

// The 13 annotated thoracolumbar levels.
extern const std::array<const char*, 13> kVertebraLevels;

// severity is the relative height loss of the collapsing ridge: the middle
// height for concave shapes (where it equals the grading severity), the
// anterior height for wedges and the posterior height for crushes (where
// the grading severity works out larger; see gsq_severity_for_shape).
struct SynthSpec {
  Morphology morphology = Morphology::normal;
  double severity = 0.0;  // ridge height-loss fraction, in [0, 0.8]
  double base_height = 100.0;
  double base_width = 60.0;
  double rotation_deg = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedVertebra {
  VertebraKeypoints keypoints;  // with noise applied
  VertebraKeypoints clean;      // noiseless (deformed and rotated)
  RatioProfile clean_ratios;
  Grade grade;            // crisp labels recomputed from the clean keypoints
  Morphology morphology;
};

// Deforms a rectangle to the requested shape and severity, labels it with
// the crisp classifier on the noiseless keypoints, then applies rotation
// and additive Gaussian noise. Throws UnreachableSeverity when a normal
// shape is requested with a severity that would grade as fractured.
GeneratedVertebra generate_vertebra(const SynthSpec& spec,
                                    const GsqThresholds& th = GsqThresholds{});

// Grading severity produced by a shape at ridge height-loss s, and its
// inverse (bisection); the map is the identity for concave shapes.
double gsq_severity_for_shape(Morphology shape, double ridge_loss);
double ridge_loss_for_gsq_severity(Morphology shape, double severity);

struct CohortSpec {
  int patients = 100;
  int min_vertebrae = 1;
  int max_vertebrae = 13;
  // Grade mixture; defaults follow the training-split prevalence used for
  // the synthetic benchmark (9319/227/222/94).
  std::array<double, kNumGrades> grade_mix{9319.0 / 9862.0, 227.0 / 9862.0,
                                           222.0 / 9862.0, 94.0 / 9862.0};
  double missing_prob = 0.0;  // chance a vertebra has one masked keypoint
  double noise_sigma = 0.0;
  double min_height = 80.0, max_height = 120.0;
  double min_width = 50.0, max_width = 70.0;
  double max_rotation_deg = 15.0;
  std::uint64_t seed = 0;

  void validate() const;  // mixture sums to 1, counts within 1..13
};

struct CohortVertebra {
  std::string patient_id;
  std::string level;
  VertebraKeypoints keypoints;
  std::array<bool, kNumLandmarks> imputed{};
  Grade grade = Grade::normal;
  Morphology morphology = Morphology::normal;
};

struct Cohort {
  std::vector<CohortVertebra> vertebrae;
};

Cohort generate_cohort(const CohortSpec& spec, const GsqThresholds& th = GsqThresholds{});

// Fills missing keypoints from the k nearest same-level vertebrae of other
// patients. Distance is Euclidean over the mutually present keypoints in
// box-normalized local coordinates; the imputed coordinate is the neighbor
// mean in normalized space mapped back through the target's box. Imputed
// points are flagged so evaluation can downweight them.
Cohort impute_knn(const Cohort& cohort, int k = 5);

}  // namespace vfa
