#include "vfa/config.hpp"

#include <sstream>

#include "vfa/textio.hpp"

namespace vfa {

void RunConfig::validate() const {
  thresholds.validate();
  if (flow_layers < 1 || flow_hidden < 1) throw InputError("flow size must be positive");
  if (!(flow_step > 0.0)) throw InputError("flow step must be positive");
  if (flow_epochs < 1 || flow_batch < 1) throw InputError("flow schedule must be positive");
  if (!(flow_bhat_x > 0.0) || !(flow_bhat_y > 0.0))
    throw InputError("flow bhat must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  if (mc_samples < 1) throw InputError("mc_samples must be positive");
  if (knn_k < 1) throw InputError("knn_k must be positive");
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "tol_normal") cfg.thresholds.tol_normal = parse_double(value);
  else if (key == "tol_mild") cfg.thresholds.tol_mild = parse_double(value);
  else if (key == "tol_moderate") cfg.thresholds.tol_moderate = parse_double(value);
  else if (key == "tau") cfg.thresholds.tau = parse_double(value);
  else if (key == "convex_graded") cfg.thresholds.convex_graded = parse_bool(value);
  else if (key == "flow_base") cfg.flow_base = base_density_from_string(trim(value));
  else if (key == "flow_layers") cfg.flow_layers = parse_int(value);
  else if (key == "flow_hidden") cfg.flow_hidden = parse_int(value);
  else if (key == "flow_step") cfg.flow_step = parse_double(value);
  else if (key == "flow_epochs") cfg.flow_epochs = parse_int(value);
  else if (key == "flow_batch") cfg.flow_batch = parse_int(value);
  else if (key == "flow_warmup") cfg.flow_warmup = parse_int(value);
  else if (key == "flow_bhat_x") cfg.flow_bhat_x = parse_double(value);
  else if (key == "flow_bhat_y") cfg.flow_bhat_y = parse_double(value);
  else if (key == "lambda_iou") cfg.lambda_iou = parse_double(value);
  else if (key == "lambda_l1") cfg.lambda_l1 = parse_double(value);
  else if (key == "lambda_kps") cfg.lambda_kps = parse_double(value);
  else if (key == "lambda_img") cfg.lambda_img = parse_double(value);
  else if (key == "class_weights") {
    const std::string v = trim(value);
    if (v == "auto") {
      cfg.class_weights.reset();
    } else {
      const std::vector<std::string> parts = split(v, ',');
      if (parts.size() != kNumGrades)
        throw ParseError("class_weights needs 'auto' or 4 comma-separated values");
      std::array<double, kNumGrades> w{};
      for (int i = 0; i < kNumGrades; ++i) w[i] = parse_double(parts[i]);
      cfg.class_weights = w;
    }
  } else if (key == "merge_classes") cfg.merge_classes = parse_bool(value);
  else if (key == "alpha") cfg.alpha = parse_double(value);
  else if (key == "mc_samples") cfg.mc_samples = parse_int(value);
  else if (key == "knn_k") cfg.knn_k = parse_int(value);
  else if (key == "seed") cfg.seed = parse_u64(value);
  else if (key == "out_dir") cfg.out_dir = trim(value);
  else throw ParseError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + " is not key = value");
    try {
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string config_to_string(const RunConfig& cfg) {
  std::ostringstream out;
  out << "tol_normal = " << format_double(cfg.thresholds.tol_normal) << "\n";
  out << "tol_mild = " << format_double(cfg.thresholds.tol_mild) << "\n";
  out << "tol_moderate = " << format_double(cfg.thresholds.tol_moderate) << "\n";
  out << "tau = " << format_double(cfg.thresholds.tau) << "\n";
  out << "convex_graded = " << (cfg.thresholds.convex_graded ? "true" : "false") << "\n";
  out << "flow_base = " << to_string(cfg.flow_base) << "\n";
  out << "flow_layers = " << cfg.flow_layers << "\n";
  out << "flow_hidden = " << cfg.flow_hidden << "\n";
  out << "flow_step = " << format_double(cfg.flow_step) << "\n";
  out << "flow_epochs = " << cfg.flow_epochs << "\n";
  out << "flow_batch = " << cfg.flow_batch << "\n";
  out << "flow_warmup = " << cfg.flow_warmup << "\n";
  out << "flow_bhat_x = " << format_double(cfg.flow_bhat_x) << "\n";
  out << "flow_bhat_y = " << format_double(cfg.flow_bhat_y) << "\n";
  out << "lambda_iou = " << format_double(cfg.lambda_iou) << "\n";
  out << "lambda_l1 = " << format_double(cfg.lambda_l1) << "\n";
  out << "lambda_kps = " << format_double(cfg.lambda_kps) << "\n";
  out << "lambda_img = " << format_double(cfg.lambda_img) << "\n";
  if (cfg.class_weights) {
    out << "class_weights = ";
    for (int i = 0; i < kNumGrades; ++i)
      out << (i ? "," : "") << format_double((*cfg.class_weights)[i]);
    out << "\n";
  } else {
    out << "class_weights = auto\n";
  }
  out << "merge_classes = " << (cfg.merge_classes ? "true" : "false") << "\n";
  out << "alpha = " << format_double(cfg.alpha) << "\n";
  out << "mc_samples = " << cfg.mc_samples << "\n";
  out << "knn_k = " << cfg.knn_k << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

std::string config_hash_hex(const RunConfig& cfg) {
  return to_hex(fnv1a(config_to_string(cfg)));
}

FitConfig fit_config_from(const RunConfig& cfg) {
  FitConfig fc;
  fc.step = cfg.flow_step;
  fc.epochs = cfg.flow_epochs;
  fc.batch_size = cfg.flow_batch;
  fc.warmup_epochs = cfg.flow_warmup;
  fc.layers = cfg.flow_layers;
  fc.hidden = cfg.flow_hidden;
  fc.base = cfg.flow_base;
  fc.seed = cfg.seed;
  return fc;
}

}  // namespace vfa
