// vfa - vertebral fracture assessment toolkit CLI.
//
// Exit codes: 0 success, 1 usage error, 2 input error, 3 numeric failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vfa/commands.hpp"
#include "vfa/textio.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double alpha = 0.0;
  bool alpha_set = false;
  double tau = 0.0;
  bool tau_set = false;
  bool merge_classes = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "flat key = value config file");
  cmd->add_option("--out", f.out, "output directory (or file for synth/impute)");
  cmd->add_option("--seed", f.seed, "random seed")->each([&](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--alpha", f.alpha, "quantile level in (0,1)")
      ->each([&](const std::string&) { f.alpha_set = true; });
  cmd->add_option("--tau", f.tau, "fuzzy sigmoid temperature")
      ->each([&](const std::string&) { f.tau_set = true; });
  cmd->add_flag("--merge-classes", f.merge_classes, "emit merged class views");
}

vfa::RunConfig make_config(const CommonFlags& f) {
  vfa::RunConfig cfg =
      f.config_path.empty() ? vfa::RunConfig{} : vfa::load_config(f.config_path);
  if (f.seed_set) cfg.seed = f.seed;
  if (f.alpha_set) cfg.alpha = f.alpha;
  if (f.tau_set) cfg.thresholds.tau = f.tau;
  if (f.merge_classes) cfg.merge_classes = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vertebral fracture assessment from six-point keypoint annotations"};
  app.require_subcommand(1);

  CommonFlags classify_f, borders_f, evaluate_f, uncertainty_f, synth_f, impute_f,
      fitflow_f, detloss_f;

  auto* classify = app.add_subcommand("classify", "crisp + fuzzy classification per vertebra");
  std::string classify_annots;
  classify->add_option("--annotations", classify_annots, "annotation CSV")->required();
  add_common(classify, classify_f);

  auto* borders = app.add_subcommand("borders", "decision-border raster and SVG plots");
  double borders_step = 0.01;
  borders->add_option("--step", borders_step, "grid step over (MPR, MAR)");
  add_common(borders, borders_f);

  auto* evaluate = app.add_subcommand("evaluate", "metric reports against a truth file");
  std::string eval_pred, eval_truth;
  evaluate->add_option("--predictions", eval_pred, "classify output CSV")->required();
  evaluate->add_option("--truth", eval_truth, "labeled annotation CSV")->required();
  add_common(evaluate, evaluate_f);

  auto* uncertainty =
      app.add_subcommand("uncertainty", "Monte-Carlo classification uncertainty");
  std::string unc_annots, unc_model;
  uncertainty->add_option("--annotations", unc_annots, "annotation CSV")->required();
  uncertainty->add_option("--model", unc_model, "flow model file")->required();
  add_common(uncertainty, uncertainty_f);

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled cohort");
  int synth_patients = 100;
  double synth_noise = 0.0, synth_missing = 0.0;
  std::string synth_mix;
  synth->add_option("--patients", synth_patients, "number of patients");
  synth->add_option("--noise", synth_noise, "keypoint noise sigma (px)");
  synth->add_option("--missing-prob", synth_missing, "per-vertebra missing-point chance");
  synth->add_option("--mix", synth_mix, "grade mixture, 4 comma-separated proportions");
  add_common(synth, synth_f);

  auto* impute = app.add_subcommand("impute", "k-NN imputation of missing keypoints");
  std::string impute_annots;
  int impute_k = 0;
  impute->add_option("--annotations", impute_annots, "annotation CSV")->required();
  impute->add_option("--k", impute_k, "neighbor count (default from config)");
  add_common(impute, impute_f);

  auto* fitflow = app.add_subcommand("fit-flow", "train the residual flow on residuals");
  std::string fitflow_residuals;
  fitflow->add_option("--residuals", fitflow_residuals, "CSV with x,y,mu_x,mu_y,b_x,b_y")
      ->required();
  add_common(fitflow, fitflow_f);

  auto* detloss = app.add_subcommand("detloss", "Hungarian-matched detection loss");
  std::string det_pred, det_truth;
  detloss->add_option("--pred", det_pred, "predicted boxes CSV")->required();
  detloss->add_option("--truth", det_truth, "ground-truth boxes CSV")->required();
  add_common(detloss, detloss_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (classify->parsed()) {
      const vfa::RunConfig cfg = make_config(classify_f);
      const vfa::ClassifyResult r = vfa::cmd_classify(classify_annots, cfg, classify_f.out);
      std::cout << "classified " << r.rows << " vertebrae (" << r.rejects
                << " rejected) -> " << r.output_path << "\n";
    } else if (borders->parsed()) {
      const vfa::RunConfig cfg = make_config(borders_f);
      const vfa::BordersResult r = vfa::cmd_borders(cfg, borders_step, borders_f.out);
      std::cout << "rasterized " << r.cells << " cells -> " << r.grid_path << ", "
                << r.grade_svg_path << ", " << r.morphology_svg_path << "\n";
    } else if (evaluate->parsed()) {
      const vfa::RunConfig cfg = make_config(evaluate_f);
      const vfa::EvaluateResult r = vfa::cmd_evaluate(eval_pred, eval_truth, cfg, evaluate_f.out);
      std::cout << "evaluated " << r.vertebrae << " vertebrae / " << r.patients
                << " patients -> " << r.vertebra_metrics_path << "\n";
    } else if (uncertainty->parsed()) {
      const vfa::RunConfig cfg = make_config(uncertainty_f);
      const vfa::UncertaintyResult r =
          vfa::cmd_uncertainty(unc_annots, unc_model, cfg, uncertainty_f.out);
      std::cout << "uncertainty for " << r.rows << " vertebrae (" << r.rejects
                << " rejected) -> " << r.output_path << "\n";
    } else if (synth->parsed()) {
      const vfa::RunConfig cfg = make_config(synth_f);
      vfa::CohortSpec spec;
      spec.patients = synth_patients;
      spec.noise_sigma = synth_noise;
      spec.missing_prob = synth_missing;
      spec.seed = cfg.seed;
      if (!synth_mix.empty()) {
        const auto parts = vfa::split(synth_mix, ',');
        if (parts.size() != 4) throw vfa::ParseError("--mix needs 4 proportions");
        for (int i = 0; i < 4; ++i) spec.grade_mix[i] = vfa::parse_double(parts[i]);
      }
      const std::string out_path =
          synth_f.out == "." ? "cohort.csv"
                             : (synth_f.out.find(".csv") != std::string::npos
                                    ? synth_f.out
                                    : synth_f.out + "/cohort.csv");
      const vfa::SynthResult r = vfa::cmd_synth(spec, cfg, out_path);
      std::cout << "generated " << r.vertebrae << " vertebrae / " << r.patients
                << " patients -> " << r.output_path << "\n";
    } else if (impute->parsed()) {
      vfa::RunConfig cfg = make_config(impute_f);
      if (impute_k > 0) cfg.knn_k = impute_k;
      const std::string out_path =
          impute_f.out == "." ? "imputed.csv"
                              : (impute_f.out.find(".csv") != std::string::npos
                                     ? impute_f.out
                                     : impute_f.out + "/imputed.csv");
      const vfa::ImputeResult r = vfa::cmd_impute(impute_annots, cfg, out_path);
      std::cout << "imputed " << r.imputed_points << " keypoints -> " << r.output_path
                << "\n";
    } else if (fitflow->parsed()) {
      const vfa::RunConfig cfg = make_config(fitflow_f);
      const vfa::FitFlowResult r = vfa::cmd_fit_flow(fitflow_residuals, cfg, fitflow_f.out);
      std::printf("fitted flow on %d samples: NLL %.6f -> %.6f (%s)\n", r.samples,
                  r.initial_nll, r.final_nll, r.model_path.c_str());
    } else if (detloss->parsed()) {
      const vfa::RunConfig cfg = make_config(detloss_f);
      const vfa::DetLossResult r = vfa::cmd_detloss(det_pred, det_truth, cfg, detloss_f.out);
      std::printf("detection loss %.12g over %d matched pairs (%s)\n", r.total,
                  r.matched_pairs, r.breakdown_path.c_str());
    }
  } catch (const vfa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const vfa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
