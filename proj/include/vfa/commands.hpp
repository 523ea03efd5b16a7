#pragma once

#include <string>

#include "vfa/config.hpp"
#include "vfa/synthdata.hpp"

namespace vfa {

// Library-level command implementations. The CLI executable is a thin
// argument parser over these; tests drive them directly. Hard failures
// throw (InputError -> exit 2, NumericError -> exit 3 in the CLI); per-row
// problems go to rejects files and never abort a batch.

struct ClassifyResult {
  int rows = 0;
  int rejects = 0;
  std::string output_path;
  std::string rejects_path;
};

// Per-vertebra ratios, severity, crisp classes, fuzzy posterior and (when
// an image posterior is present) the combined posterior.
ClassifyResult cmd_classify(const std::string& annotations_path, const RunConfig& cfg,
                            const std::string& out_dir);

struct BordersResult {
  int cells = 0;
  std::string grid_path;
  std::string grade_svg_path;
  std::string morphology_svg_path;
};

// Crisp class raster over (MPR, MAR) in [0.2, 1.5]^2 plus SVG band plots.
BordersResult cmd_borders(const RunConfig& cfg, double step, const std::string& out_dir);

struct EvaluateResult {
  int vertebrae = 0;
  int patients = 0;
  std::string vertebra_metrics_path;
  std::string patient_metrics_path;
};

// Classification metrics at the Youden operating point, one-vs-rest and
// binary screening views, confusion matrices, patient-level aggregation.
EvaluateResult cmd_evaluate(const std::string& predictions_path,
                            const std::string& truth_path, const RunConfig& cfg,
                            const std::string& out_dir);

struct UncertaintyResult {
  int rows = 0;
  int rejects = 0;
  std::string output_path;
};

// Monte-Carlo propagation of the model file's keypoint density through the
// fuzzy classifier, per vertebra.
UncertaintyResult cmd_uncertainty(const std::string& annotations_path,
                                  const std::string& model_path, const RunConfig& cfg,
                                  const std::string& out_dir);

struct SynthResult {
  int vertebrae = 0;
  int patients = 0;
  std::string output_path;
};

SynthResult cmd_synth(const CohortSpec& spec, const RunConfig& cfg,
                      const std::string& out_path);

struct ImputeResult {
  int imputed_points = 0;
  std::string output_path;
};

ImputeResult cmd_impute(const std::string& annotations_path, const RunConfig& cfg,
                        const std::string& out_path);

struct FitFlowResult {
  double initial_nll = 0.0;
  double final_nll = 0.0;
  int samples = 0;
  std::string model_path;
  std::string trace_path;
};

// Trains the residual flow on a CSV of (x, y, mu_x, mu_y, b_x, b_y) rows.
FitFlowResult cmd_fit_flow(const std::string& residuals_path, const RunConfig& cfg,
                           const std::string& out_dir);

struct DetLossResult {
  double total = 0.0;
  int matched_pairs = 0;
  std::string breakdown_path;
};

DetLossResult cmd_detloss(const std::string& pred_boxes_path,
                          const std::string& truth_boxes_path, const RunConfig& cfg,
                          const std::string& out_dir);

}  // namespace vfa
