#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "vfa/gsq.hpp"
#include "vfa/rle.hpp"

namespace vfa {

// Everything a run needs, loadable from a flat key = value text file
// ('#' comments allowed). Unknown keys are rejected so typos surface.
struct RunConfig {
  GsqThresholds thresholds;

  BaseDensity flow_base = BaseDensity::gaussian;
  int flow_layers = 4;
  int flow_hidden = 16;
  double flow_step = 1e-2;
  int flow_epochs = 200;
  int flow_batch = 256;
  int flow_warmup = 10;
  double flow_bhat_x = 1.0;  // scale attached to fitted models / uncertainty runs
  double flow_bhat_y = 1.0;

  double lambda_iou = 2.0;
  double lambda_l1 = 5.0;
  double lambda_kps = 1.0;
  double lambda_img = 1.0;
  // Grade class weights; unset means inverse class frequency of the data.
  std::optional<std::array<double, kNumGrades>> class_weights;

  bool merge_classes = false;
  double alpha = 0.95;
  int mc_samples = 1000;
  int knn_k = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  void validate() const;
};

RunConfig parse_config(const std::string& text);  // throws ParseError
RunConfig load_config(const std::string& path);
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical serialization; its FNV-1a hash stamps every report.
std::string config_to_string(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

FitConfig fit_config_from(const RunConfig& cfg);

}  // namespace vfa
