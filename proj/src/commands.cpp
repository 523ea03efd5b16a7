#include "vfa/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "vfa/annotation.hpp"
#include "vfa/evalmatch.hpp"
#include "vfa/rng.hpp"
#include "vfa/rle.hpp"

namespace vfa {

namespace {

namespace fs = std::filesystem;

std::string out_file(const std::string& out_dir, const std::string& name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

void stamp(CsvDoc& doc, const RunConfig& cfg, const std::string& command) {
  doc.metadata.emplace_back("command", command);
  doc.metadata.emplace_back("config_hash", config_hash_hex(cfg));
  doc.metadata.emplace_back("seed", std::to_string(cfg.seed));
}

const char* kFuzzyGradeCols[4] = {"fuzzy_normal", "fuzzy_mild", "fuzzy_moderate",
                                  "fuzzy_severe"};
const char* kFuzzyMorphCols[4] = {"fuzzy_morph_normal", "fuzzy_morph_wedge",
                                  "fuzzy_morph_crush", "fuzzy_morph_concave"};
const char* kCombGradeCols[4] = {"comb_normal", "comb_mild", "comb_moderate",
                                 "comb_severe"};
const char* kCombMorphCols[4] = {"comb_morph_normal", "comb_morph_wedge",
                                 "comb_morph_crush", "comb_morph_concave"};

}  // namespace

ClassifyResult cmd_classify(const std::string& annotations_path, const RunConfig& cfg,
                            const std::string& out_dir) {
  cfg.validate();
  const AnnotationFile file = read_annotations(annotations_path);
  if (file.records.empty() && file.rejects.empty())
    std::cerr << "warning: no vertebra rows in " << annotations_path << "\n";

  bool any_pimg = false;
  for (const AnnotationRecord& r : file.records)
    any_pimg = any_pimg || r.pimg_grade.has_value() || r.pimg_morph.has_value();

  CsvDoc doc;
  stamp(doc, cfg, "classify");
  doc.metadata.emplace_back("input", annotations_path);
  doc.header = {"patient_id", "level",    "h_p",      "h_m", "h_a",
                "apr",        "mpr",      "mar",      "severity"};
  doc.header.push_back("crisp_grade");
  doc.header.push_back("crisp_morphology");
  for (const char* c : kFuzzyGradeCols) doc.header.push_back(c);
  for (const char* c : kFuzzyMorphCols) doc.header.push_back(c);
  doc.header.push_back("fuzzy_grade");
  doc.header.push_back("fuzzy_morphology");
  if (any_pimg) {
    for (const char* c : kCombGradeCols) doc.header.push_back(c);
    for (const char* c : kCombMorphCols) doc.header.push_back(c);
    doc.header.push_back("comb_grade");
    doc.header.push_back("comb_morphology");
  }

  CsvDoc rejects;
  rejects.header = {"line", "patient_id", "level", "reason"};
  for (const auto& [line, reason] : file.rejects)
    rejects.rows.push_back({std::to_string(line), "", "", reason});

  for (const AnnotationRecord& rec : file.records) {
    try {
      rec.keypoints.validate_full();
      const RatioProfile ratios = ratios_from_keypoints(rec.keypoints);
      const double severity = severity_score(ratios, cfg.thresholds);
      const Grade cg = crisp_grade(ratios, cfg.thresholds);
      const Morphology cm = crisp_morphology(ratios, cfg.thresholds);
      const ClassPosterior fuzzy = fuzzy_memberships(ratios, cfg.thresholds);

      std::vector<std::string> row = {rec.patient_id,
                                      rec.level,
                                      format_double(ratios.h_p),
                                      format_double(ratios.h_m),
                                      format_double(ratios.h_a),
                                      format_double(ratios.apr),
                                      format_double(ratios.mpr),
                                      format_double(ratios.mar),
                                      format_double(severity),
                                      to_string(cg),
                                      to_string(cm)};
      for (int i = 0; i < 4; ++i) row.push_back(format_double(fuzzy.grade[i]));
      for (int i = 0; i < 4; ++i) row.push_back(format_double(fuzzy.morphology[i]));
      row.push_back(to_string(fuzzy.grade_argmax()));
      row.push_back(to_string(fuzzy.morphology_argmax()));

      if (any_pimg) {
        if (rec.pimg_grade || rec.pimg_morph) {
          ClassPosterior pimg;
          pimg.grade = rec.pimg_grade.value_or(std::array<double, 4>{1, 1, 1, 1});
          pimg.morphology = rec.pimg_morph.value_or(std::array<double, 4>{1, 1, 1, 1});
          const ClassPosterior comb = combine_posterior(fuzzy, pimg);
          for (int i = 0; i < 4; ++i) row.push_back(format_double(comb.grade[i]));
          for (int i = 0; i < 4; ++i) row.push_back(format_double(comb.morphology[i]));
          row.push_back(to_string(comb.grade_argmax()));
          row.push_back(to_string(comb.morphology_argmax()));
        } else {
          for (int i = 0; i < 10; ++i) row.emplace_back();
        }
      }
      doc.rows.push_back(std::move(row));
    } catch (const Error& e) {
      rejects.rows.push_back(
          {std::to_string(rec.line), rec.patient_id, rec.level, e.what()});
    }
  }

  ClassifyResult result;
  result.rows = static_cast<int>(doc.rows.size());
  result.rejects = static_cast<int>(rejects.rows.size());
  result.output_path = out_file(out_dir, "classify.csv");
  result.rejects_path = out_file(out_dir, "classify_rejects.csv");
  write_csv(result.output_path, doc);
  write_csv(result.rejects_path, rejects);
  return result;
}

namespace {

struct BorderGrid {
  double lo = 0.2, hi = 1.5, step = 0.01;
  int n = 0;  // nodes per axis
  std::vector<Grade> grade;
  std::vector<Morphology> morph;

  double coord(int i) const { return lo + i * step; }
  int index(int ix, int iy) const { return iy * n + ix; }
};

BorderGrid rasterize_borders(const GsqThresholds& th, double step) {
  BorderGrid g;
  g.step = step;
  g.n = static_cast<int>(std::lround((g.hi - g.lo) / step)) + 1;
  g.grade.resize(static_cast<std::size_t>(g.n) * g.n);
  g.morph.resize(static_cast<std::size_t>(g.n) * g.n);
  for (int iy = 0; iy < g.n; ++iy) {
    for (int ix = 0; ix < g.n; ++ix) {
      const RatioProfile r = profile_from_ratios(g.coord(ix), g.coord(iy));
      g.grade[g.index(ix, iy)] = crisp_grade(r, th);
      g.morph[g.index(ix, iy)] = crisp_morphology(r, th);
    }
  }
  return g;
}

const char* kGradeFill[4] = {"#e8f0e8", "#f5e58a", "#f2b06e", "#e07a7a"};
const char* kMorphFill[4] = {"#e8f0e8", "#8db6e0", "#7fcdc4", "#f2c08a"};

// One <g> layer per class; horizontal runs of same-class cells merge into
// single rects.
template <class ClassOf>
std::string borders_svg(const BorderGrid& g, const char* const fill[4],
                        const char* const names[4], ClassOf class_of,
                        const std::string& title) {
  const double size = 520.0, margin_l = 56.0, margin_b = 40.0, margin_t = 24.0,
               margin_r = 16.0;
  const double W = margin_l + size + margin_r, H = margin_t + size + margin_b;
  const double span = g.hi - g.lo;
  auto X = [&](double v) { return margin_l + (v - g.lo) / span * size; };
  auto Y = [&](double v) { return margin_t + (g.hi - v) / span * size; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<title>" << title << "</title>\n";

  for (int c = 0; c < 4; ++c) {
    svg << "<g id=\"" << names[c] << "\" fill=\"" << fill[c] << "\">\n";
    for (int iy = 0; iy < g.n; ++iy) {
      int ix = 0;
      while (ix < g.n) {
        if (static_cast<int>(class_of(g.index(ix, iy))) != c) {
          ++ix;
          continue;
        }
        int run = ix;
        while (run < g.n && static_cast<int>(class_of(g.index(run, iy))) == c) ++run;
        const double x0 = X(g.coord(ix));
        const double x1 = X(std::min(g.coord(run - 1) + g.step, g.hi));
        const double y1 = Y(g.coord(iy));
        const double y0 = Y(std::min(g.coord(iy) + g.step, g.hi));
        svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << x1 - x0
            << "\" height=\"" << y1 - y0 << "\"/>\n";
        ix = run;
      }
    }
    svg << "</g>\n";
  }

  svg << "<rect x=\"" << margin_l << "\" y=\"" << margin_t << "\" width=\"" << size
      << "\" height=\"" << size << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  for (double t = 0.2; t <= 1.5001; t += 0.2) {
    svg << "<text x=\"" << X(t) - 10 << "\" y=\"" << margin_t + size + 16 << "\">" << t
        << "</text>\n";
    svg << "<text x=\"" << margin_l - 34 << "\" y=\"" << Y(t) + 4 << "\">" << t
        << "</text>\n";
  }
  svg << "<text x=\"" << margin_l + size / 2 - 14 << "\" y=\"" << H - 8
      << "\">MPR</text>\n";
  svg << "<text x=\"14\" y=\"" << margin_t + size / 2
      << "\" transform=\"rotate(-90 14 " << margin_t + size / 2 << ")\">MAR</text>\n";
  for (int c = 0; c < 4; ++c) {
    const double lx = margin_l + 8 + 120.0 * c;
    svg << "<rect x=\"" << lx << "\" y=\"6\" width=\"12\" height=\"12\" fill=\"" << fill[c]
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << lx + 16 << "\" y=\"16\">" << names[c] << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace

BordersResult cmd_borders(const RunConfig& cfg, double step, const std::string& out_dir) {
  cfg.validate();
  if (!(step > 0.0)) throw InputError("grid step must be positive");
  const BorderGrid grid = rasterize_borders(cfg.thresholds, step);

  CsvDoc doc;
  stamp(doc, cfg, "borders");
  doc.metadata.emplace_back("step", format_double(step));
  doc.header = {"mpr", "mar", "grade", "morphology"};
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix)
      doc.rows.push_back({format_double(grid.coord(ix)), format_double(grid.coord(iy)),
                          to_string(grid.grade[grid.index(ix, iy)]),
                          to_string(grid.morph[grid.index(ix, iy)])});

  BordersResult result;
  result.cells = grid.n * grid.n;
  result.grid_path = out_file(out_dir, "borders_grid.csv");
  write_csv(result.grid_path, doc);

  const char* grade_names[4] = {"normal", "mild", "moderate", "severe"};
  const char* morph_names[4] = {"normal", "wedge", "crush", "concave"};
  result.grade_svg_path = out_file(out_dir, "borders_grade.svg");
  write_file(result.grade_svg_path,
             borders_svg(
                 grid, kGradeFill, grade_names,
                 [&](int i) { return grid.grade[i]; }, "Grade decision borders"));
  result.morphology_svg_path = out_file(out_dir, "borders_morphology.svg");
  write_file(result.morphology_svg_path,
             borders_svg(
                 grid, kMorphFill, morph_names,
                 [&](int i) { return grid.morph[i]; }, "Morphology decision borders"));
  return result;
}

namespace {

struct EvalItem {
  std::string patient;
  Grade t_grade = Grade::normal;
  Morphology t_morph = Morphology::normal;
  Grade p_grade = Grade::normal;
  Morphology p_morph = Morphology::normal;
  double severity = 0.0;
  std::array<double, 4> fz_grade{}, fz_morph{};
};

struct MetricRow {
  std::string level, view, target, score;
  int n = 0, n_pos = 0;
  bool defined = false;
  double auc = 0.0;
  YoudenPoint yp;
};

void add_metric_row(std::vector<MetricRow>& rows, const std::string& level,
                    const std::string& view, const std::string& target,
                    const std::string& score, const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  MetricRow row;
  row.level = level;
  row.view = view;
  row.target = target;
  row.score = score;
  row.n = static_cast<int>(labels.size());
  for (int l : labels) row.n_pos += l != 0;
  try {
    row.auc = roc_auc(scores, labels);
    row.yp = youden_point(scores, labels);
    row.defined = true;
  } catch (const SingleClass&) {
    row.defined = false;  // emitted with blank metric cells
  }
  rows.push_back(std::move(row));
}

CsvDoc metric_rows_to_csv(const std::vector<MetricRow>& rows) {
  CsvDoc doc;
  doc.header = {"level",     "view",        "target",      "score", "n",
                "n_pos",     "auc",         "threshold",   "sensitivity",
                "specificity", "f1",        "youden_j"};
  for (const MetricRow& r : rows) {
    std::vector<std::string> row = {r.level,
                                    r.view,
                                    r.target,
                                    r.score,
                                    std::to_string(r.n),
                                    std::to_string(r.n_pos)};
    if (r.defined) {
      row.push_back(format_double(r.auc));
      row.push_back(format_double(r.yp.threshold));
      row.push_back(format_double(r.yp.sensitivity));
      row.push_back(format_double(r.yp.specificity));
      row.push_back(format_double(r.yp.f1));
      row.push_back(format_double(r.yp.j));
    } else {
      for (int i = 0; i < 6; ++i) row.emplace_back();
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

std::string metric_rows_to_text(const std::vector<MetricRow>& rows,
                                const std::string& heading) {
  std::ostringstream out;
  out << heading << "\n";
  for (const MetricRow& r : rows) {
    out << "  " << r.view;
    if (!r.target.empty()) out << " [" << r.target << "]";
    out << " (score=" << r.score << ", n=" << r.n << ", pos=" << r.n_pos << "): ";
    if (!r.defined) {
      out << "undefined (single class)\n";
      continue;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "AUC %.4f  thr %.4g  sens %.4f  spec %.4f  F1 %.4f  J %.4f",
                  r.auc, r.yp.threshold, r.yp.sensitivity, r.yp.specificity, r.yp.f1,
                  r.yp.j);
    out << buf << "\n";
  }
  return out.str();
}

void write_confusion_csv(const std::string& path, const RunConfig& cfg,
                         const ConfusionMatrix& cm) {
  CsvDoc doc;
  stamp(doc, cfg, "evaluate");
  doc.header = {"true_class", "total"};
  for (const std::string& c : cm.classes) doc.header.push_back("pred_" + c);
  for (std::size_t r = 0; r < cm.classes.size(); ++r) {
    std::vector<std::string> row = {cm.classes[r]};
    int total = 0;
    for (int v : cm.counts[r]) total += v;
    row.push_back(std::to_string(total));
    for (std::size_t c = 0; c < cm.classes.size(); ++c)
      row.push_back(cm.row_present[r] ? format_double(cm.rows[r][c]) : "");
    doc.rows.push_back(std::move(row));
  }
  write_csv(path, doc);
}

}  // namespace

EvaluateResult cmd_evaluate(const std::string& predictions_path,
                            const std::string& truth_path, const RunConfig& cfg,
                            const std::string& out_dir) {
  cfg.validate();
  const CsvDoc pred = read_csv(predictions_path);
  const AnnotationFile truth = read_annotations(truth_path);

  const int c_patient = pred.column("patient_id");
  const int c_level = pred.column("level");
  const int c_sev = pred.column("severity");
  const int c_cg = pred.column("crisp_grade");
  const int c_cm = pred.column("crisp_morphology");
  int c_fzg[4], c_fzm[4];
  for (int i = 0; i < 4; ++i) {
    c_fzg[i] = pred.column(kFuzzyGradeCols[i]);
    c_fzm[i] = pred.column(kFuzzyMorphCols[i]);
  }
  if (c_patient < 0 || c_level < 0 || c_sev < 0 || c_cg < 0 || c_cm < 0 || c_fzg[0] < 0 ||
      c_fzm[0] < 0)
    throw ParseError(predictions_path + ": not a classify output (missing columns)");

  std::map<std::string, const std::vector<std::string>*> pred_by_key;
  for (const auto& row : pred.rows) {
    const std::string key = trim(row[c_patient]) + "\x1f" + trim(row[c_level]);
    if (!pred_by_key.emplace(key, &row).second)
      throw IdMismatch("duplicate prediction for " + trim(row[c_patient]) + "/" +
                       trim(row[c_level]));
  }

  std::vector<EvalItem> items;
  std::set<std::string> truth_keys;
  std::vector<std::string> missing;
  for (const AnnotationRecord& rec : truth.records) {
    const std::string key = rec.patient_id + "\x1f" + rec.level;
    if (!truth_keys.insert(key).second)
      throw IdMismatch("duplicate truth row for " + rec.patient_id + "/" + rec.level);
    auto it = pred_by_key.find(key);
    if (it == pred_by_key.end()) {
      missing.push_back(rec.patient_id + "/" + rec.level);
      continue;
    }
    if (!rec.grade || !rec.morphology)
      throw InputError("truth row missing labels: " + rec.patient_id + "/" + rec.level);
    const auto& row = *it->second;
    EvalItem item;
    item.patient = rec.patient_id;
    item.t_grade = *rec.grade;
    item.t_morph = *rec.morphology;
    item.p_grade = grade_from_string(trim(row[c_cg]));
    item.p_morph = morphology_from_string(trim(row[c_cm]));
    item.severity = parse_double(row[c_sev]);
    for (int i = 0; i < 4; ++i) {
      item.fz_grade[i] = parse_double(row[c_fzg[i]]);
      item.fz_morph[i] = parse_double(row[c_fzm[i]]);
    }
    items.push_back(std::move(item));
  }
  for (const auto& [key, row] : pred_by_key) {
    if (!truth_keys.count(key)) {
      std::string pretty = key;
      std::replace(pretty.begin(), pretty.end(), '\x1f', '/');
      missing.push_back(pretty + " (prediction without truth)");
    }
  }
  if (!missing.empty()) {
    std::string msg = "unmatched ids:";
    for (std::size_t i = 0; i < missing.size() && i < 8; ++i) msg += " " + missing[i];
    if (missing.size() > 8) msg += " (+" + std::to_string(missing.size() - 8) + " more)";
    throw IdMismatch(msg);
  }
  if (items.empty()) throw EmptyTruth("no matched vertebrae to evaluate");

  // --- vertebra level ---
  std::vector<MetricRow> vrows;
  const int n = static_cast<int>(items.size());
  std::vector<double> sev(n), prob(n);
  std::vector<int> lab(n);

  for (int i = 0; i < n; ++i) sev[i] = items[i].severity;

  // Binary screening views, ranked by the severity score (primary) and by
  // the fuzzy group probability.
  for (int view = 0; view < 2; ++view) {
    const std::string name = view == 0 ? "normal_vs_rest" : "normalmild_vs_modsevere";
    for (int i = 0; i < n; ++i) {
      lab[i] = view == 0 ? items[i].t_grade != Grade::normal
                         : !(items[i].t_grade < Grade::moderate);
      prob[i] = view == 0
                    ? items[i].fz_grade[1] + items[i].fz_grade[2] + items[i].fz_grade[3]
                    : items[i].fz_grade[2] + items[i].fz_grade[3];
    }
    add_metric_row(vrows, "vertebra", name, "", "severity", sev, lab);
    add_metric_row(vrows, "vertebra", name, "", "probability", prob, lab);
  }

  for (int c = 0; c < kNumGrades; ++c) {
    for (int i = 0; i < n; ++i) {
      lab[i] = items[i].t_grade == static_cast<Grade>(c);
      prob[i] = items[i].fz_grade[c];
    }
    add_metric_row(vrows, "vertebra", "ovr_grade", to_string(static_cast<Grade>(c)),
                   "probability", prob, lab);
  }
  for (int c = 0; c < kNumMorphologies; ++c) {
    for (int i = 0; i < n; ++i) {
      lab[i] = items[i].t_morph == static_cast<Morphology>(c);
      prob[i] = items[i].fz_morph[c];
    }
    add_metric_row(vrows, "vertebra", "ovr_morphology",
                   to_string(static_cast<Morphology>(c)), "probability", prob, lab);
  }
  if (cfg.merge_classes) {
    for (int i = 0; i < n; ++i) {
      lab[i] = items[i].t_morph == Morphology::wedge || items[i].t_morph == Morphology::crush;
      prob[i] = items[i].fz_morph[1] + items[i].fz_morph[2];
    }
    add_metric_row(vrows, "vertebra", "wedgelike_vs_rest", "", "probability", prob, lab);
  }

  // Confusion matrices from the crisp predictions.
  {
    std::vector<int> t(n), p(n);
    for (int i = 0; i < n; ++i) {
      t[i] = static_cast<int>(items[i].t_grade);
      p[i] = static_cast<int>(items[i].p_grade);
    }
    write_confusion_csv(out_file(out_dir, "confusion_grade.csv"), cfg,
                        confusion(t, p, {"normal", "mild", "moderate", "severe"}));
    for (int i = 0; i < n; ++i) {
      t[i] = static_cast<int>(items[i].t_morph);
      p[i] = static_cast<int>(items[i].p_morph);
    }
    write_confusion_csv(out_file(out_dir, "confusion_morphology.csv"), cfg,
                        confusion(t, p, {"normal", "wedge", "crush", "concave"}));
    if (cfg.merge_classes) {
      for (int i = 0; i < n; ++i) {
        t[i] = static_cast<int>(items[i].t_grade) < 2 ? 0 : 1;
        p[i] = static_cast<int>(items[i].p_grade) < 2 ? 0 : 1;
      }
      write_confusion_csv(out_file(out_dir, "confusion_grade_merged.csv"), cfg,
                          confusion(t, p, {"normal+mild", "moderate+severe"}));
      auto merge_morph = [](Morphology m) {
        if (m == Morphology::normal) return 0;
        if (m == Morphology::concave) return 2;
        return 1;  // wedge-like
      };
      for (int i = 0; i < n; ++i) {
        t[i] = merge_morph(items[i].t_morph);
        p[i] = merge_morph(items[i].p_morph);
      }
      write_confusion_csv(out_file(out_dir, "confusion_morphology_merged.csv"), cfg,
                          confusion(t, p, {"normal", "wedgelike", "concave"}));
    }
  }

  // --- patient level ---
  std::map<std::string, std::vector<int>> by_patient;
  for (int i = 0; i < n; ++i) by_patient[items[i].patient].push_back(i);

  const int np = static_cast<int>(by_patient.size());
  std::vector<double> p_sev, p_prob;
  std::vector<int> p_lab, pt_grade, pp_grade;
  for (const auto& [patient, idxs] : by_patient) {
    std::vector<Grade> tg, pg;
    double max_sev = 0.0, max_prob = 0.0;
    for (int i : idxs) {
      tg.push_back(items[i].t_grade);
      pg.push_back(items[i].p_grade);
      max_sev = std::max(max_sev, items[i].severity);
      max_prob = std::max(max_prob, items[i].fz_grade[2] + items[i].fz_grade[3]);
    }
    const Grade t_agg = aggregate_patient(tg);
    const Grade p_agg = aggregate_patient(pg);
    pt_grade.push_back(static_cast<int>(t_agg));
    pp_grade.push_back(static_cast<int>(p_agg));
    p_lab.push_back(!(t_agg < Grade::moderate));
    p_sev.push_back(max_sev);
    p_prob.push_back(max_prob);
  }

  std::vector<MetricRow> prows;
  add_metric_row(prows, "patient", "normalmild_vs_modsevere", "", "severity", p_sev, p_lab);
  add_metric_row(prows, "patient", "normalmild_vs_modsevere", "", "probability", p_prob,
                 p_lab);
  write_confusion_csv(out_file(out_dir, "confusion_grade_patient.csv"), cfg,
                      confusion(pt_grade, pp_grade, {"normal", "mild", "moderate", "severe"}));

  EvaluateResult result;
  result.vertebrae = n;
  result.patients = np;

  CsvDoc vdoc = metric_rows_to_csv(vrows);
  stamp(vdoc, cfg, "evaluate");
  vdoc.metadata.emplace_back("vertebrae", std::to_string(n));
  result.vertebra_metrics_path = out_file(out_dir, "metrics_vertebra.csv");
  write_csv(result.vertebra_metrics_path, vdoc);

  CsvDoc pdoc = metric_rows_to_csv(prows);
  stamp(pdoc, cfg, "evaluate");
  pdoc.metadata.emplace_back("patients", std::to_string(np));
  result.patient_metrics_path = out_file(out_dir, "metrics_patient.csv");
  write_csv(result.patient_metrics_path, pdoc);

  write_file(out_file(out_dir, "metrics_vertebra.txt"),
             metric_rows_to_text(vrows, "Vertebra-level metrics (n=" + std::to_string(n) +
                                            ", config " + config_hash_hex(cfg) + ")"));
  write_file(out_file(out_dir, "metrics_patient.txt"),
             metric_rows_to_text(prows, "Patient-level metrics (n=" + std::to_string(np) +
                                            ", config " + config_hash_hex(cfg) + ")"));
  return result;
}

UncertaintyResult cmd_uncertainty(const std::string& annotations_path,
                                  const std::string& model_path, const RunConfig& cfg,
                                  const std::string& out_dir) {
  cfg.validate();
  const RleModel base_model = load_rle_model(model_path);
  const AnnotationFile file = read_annotations(annotations_path);

  // The half-widths depend only on the flow, base and scale, not on mu.
  const QuantileInterval qi =
      quantile_interval(base_model, cfg.alpha, 100000, derive_seed(cfg.seed, 0x71e5));

  CsvDoc doc;
  stamp(doc, cfg, "uncertainty");
  doc.metadata.emplace_back("model", model_path);
  doc.metadata.emplace_back("alpha", format_double(cfg.alpha));
  doc.header = {"patient_id", "level", "draws", "majority_grade", "grade_vote",
                "majority_morphology", "morph_vote"};
  for (int c = 0; c < 4; ++c) {
    const std::string g = to_string(static_cast<Grade>(c));
    doc.header.push_back("g_" + g + "_mean");
    doc.header.push_back("g_" + g + "_std");
    doc.header.push_back("g_" + g + "_lo");
    doc.header.push_back("g_" + g + "_hi");
  }
  for (int c = 0; c < 4; ++c) {
    const std::string m = to_string(static_cast<Morphology>(c));
    doc.header.push_back("m_" + m + "_mean");
    doc.header.push_back("m_" + m + "_std");
    doc.header.push_back("m_" + m + "_lo");
    doc.header.push_back("m_" + m + "_hi");
  }
  doc.header.insert(doc.header.end(),
                    {"eps_x_lo", "eps_x_hi", "eps_y_lo", "eps_y_hi"});

  CsvDoc rejects;
  rejects.header = {"line", "patient_id", "level", "reason"};
  for (const auto& [line, reason] : file.rejects)
    rejects.rows.push_back({std::to_string(line), "", "", reason});

  std::size_t row_index = 0;
  for (const AnnotationRecord& rec : file.records) {
    const std::uint64_t row_seed = derive_seed(cfg.seed, 0x10000 + row_index);
    ++row_index;
    try {
      rec.keypoints.validate_full();
      std::array<RleModel, kNumLandmarks> models;
      for (int l = 0; l < kNumLandmarks; ++l) {
        models[l] = base_model;
        models[l].mu = rec.keypoints.pts[l];
      }
      const UncertaintyReport rep = propagate_uncertainty(models, cfg.thresholds,
                                                          cfg.mc_samples, row_seed, cfg.alpha);
      std::vector<std::string> row = {rec.patient_id,
                                      rec.level,
                                      std::to_string(rep.draws),
                                      to_string(rep.majority_grade),
                                      format_double(rep.grade_vote_fraction),
                                      to_string(rep.majority_morphology),
                                      format_double(rep.morph_vote_fraction)};
      for (int c = 0; c < 4; ++c) {
        row.push_back(format_double(rep.grade_mean[c]));
        row.push_back(format_double(rep.grade_std[c]));
        row.push_back(format_double(rep.grade_lo[c]));
        row.push_back(format_double(rep.grade_hi[c]));
      }
      for (int c = 0; c < 4; ++c) {
        row.push_back(format_double(rep.morph_mean[c]));
        row.push_back(format_double(rep.morph_std[c]));
        row.push_back(format_double(rep.morph_lo[c]));
        row.push_back(format_double(rep.morph_hi[c]));
      }
      row.push_back(format_double(qi.lower.x));
      row.push_back(format_double(qi.upper.x));
      row.push_back(format_double(qi.lower.y));
      row.push_back(format_double(qi.upper.y));
      doc.rows.push_back(std::move(row));
    } catch (const Error& e) {
      rejects.rows.push_back({std::to_string(rec.line), rec.patient_id, rec.level, e.what()});
    }
  }

  UncertaintyResult result;
  result.rows = static_cast<int>(doc.rows.size());
  result.rejects = static_cast<int>(rejects.rows.size());
  result.output_path = out_file(out_dir, "uncertainty.csv");
  write_csv(result.output_path, doc);
  write_csv(out_file(out_dir, "uncertainty_rejects.csv"), rejects);
  return result;
}

SynthResult cmd_synth(const CohortSpec& spec, const RunConfig& cfg,
                      const std::string& out_path) {
  cfg.validate();
  const Cohort cohort = generate_cohort(spec, cfg.thresholds);
  AnnotationFile file = annotations_from_cohort(cohort);
  file.metadata.emplace_back("command", "synth");
  file.metadata.emplace_back("config_hash", config_hash_hex(cfg));
  file.metadata.emplace_back("seed", std::to_string(spec.seed));
  file.metadata.emplace_back("patients", std::to_string(spec.patients));
  file.metadata.emplace_back("noise_sigma", format_double(spec.noise_sigma));
  file.metadata.emplace_back("missing_prob", format_double(spec.missing_prob));
  write_annotations(out_path, file);

  SynthResult result;
  result.vertebrae = static_cast<int>(cohort.vertebrae.size());
  result.patients = spec.patients;
  result.output_path = out_path;
  return result;
}

ImputeResult cmd_impute(const std::string& annotations_path, const RunConfig& cfg,
                        const std::string& out_path) {
  cfg.validate();
  AnnotationFile file = read_annotations(annotations_path);
  if (!file.rejects.empty())
    throw ParseError(annotations_path + ": malformed row at line " +
                     std::to_string(file.rejects.front().first) + " (" +
                     file.rejects.front().second + ")");

  Cohort cohort;
  cohort.vertebrae.reserve(file.records.size());
  for (const AnnotationRecord& r : file.records) {
    CohortVertebra v;
    v.patient_id = r.patient_id;
    v.level = r.level;
    v.keypoints = r.keypoints;
    v.imputed = r.imputed;
    cohort.vertebrae.push_back(std::move(v));
  }

  const Cohort imputed = impute_knn(cohort, cfg.knn_k);

  int filled = 0;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    for (int l = 0; l < kNumLandmarks; ++l) {
      if (imputed.vertebrae[i].imputed[l] && !file.records[i].imputed[l]) ++filled;
    }
    file.records[i].keypoints = imputed.vertebrae[i].keypoints;
    file.records[i].imputed = imputed.vertebrae[i].imputed;
  }
  file.metadata.emplace_back("imputed_points", std::to_string(filled));
  file.metadata.emplace_back("knn_k", std::to_string(cfg.knn_k));
  write_annotations(out_path, file);

  ImputeResult result;
  result.imputed_points = filled;
  result.output_path = out_path;
  return result;
}

FitFlowResult cmd_fit_flow(const std::string& residuals_path, const RunConfig& cfg,
                           const std::string& out_dir) {
  cfg.validate();
  const CsvDoc doc = read_csv(residuals_path);
  const int cx = doc.column("x"), cy = doc.column("y");
  const int cmx = doc.column("mu_x"), cmy = doc.column("mu_y");
  const int cbx = doc.column("b_x"), cby = doc.column("b_y");
  if (cx < 0 || cy < 0 || cmx < 0 || cmy < 0 || cbx < 0 || cby < 0)
    throw ParseError(residuals_path + ": needs columns x,y,mu_x,mu_y,b_x,b_y");

  std::vector<RleBatchItem> data;
  data.reserve(doc.rows.size());
  for (const auto& row : doc.rows) {
    RleBatchItem item;
    item.x = {parse_double(row[cx]), parse_double(row[cy])};
    item.mu = {parse_double(row[cmx]), parse_double(row[cmy])};
    item.b = {parse_double(row[cbx]), parse_double(row[cby])};
    data.push_back(item);
  }

  FitTrace trace;
  RleModel model = fit_flow(data, fit_config_from(cfg), &trace);
  model.b = {cfg.flow_bhat_x, cfg.flow_bhat_y};

  FitFlowResult result;
  result.samples = static_cast<int>(data.size());
  result.initial_nll = trace.initial_nll;
  result.final_nll = trace.epoch_nll.empty() ? trace.initial_nll : trace.epoch_nll.back();
  result.model_path = out_file(out_dir, "flow_model.txt");
  save_rle_model(model, result.model_path);

  CsvDoc tdoc;
  stamp(tdoc, cfg, "fit-flow");
  tdoc.metadata.emplace_back("initial_nll", format_double(trace.initial_nll));
  tdoc.header = {"epoch", "nll"};
  for (std::size_t e = 0; e < trace.epoch_nll.size(); ++e)
    tdoc.rows.push_back({std::to_string(e + 1), format_double(trace.epoch_nll[e])});
  result.trace_path = out_file(out_dir, "fit_trace.csv");
  write_csv(result.trace_path, tdoc);
  return result;
}

DetLossResult cmd_detloss(const std::string& pred_boxes_path,
                          const std::string& truth_boxes_path, const RunConfig& cfg,
                          const std::string& out_dir) {
  cfg.validate();
  const std::vector<BoxRecord> pred_boxes = read_boxes(pred_boxes_path);
  const std::vector<BoxRecord> truth_boxes = read_boxes(truth_boxes_path);

  DetectionSet pred, truth;
  for (const BoxRecord& b : pred_boxes)
    pred.items.push_back({{b.cx, b.cy, b.w, b.h}, b.score, b.weight});
  for (const BoxRecord& b : truth_boxes)
    truth.items.push_back({{b.cx, b.cy, b.w, b.h}, b.score, b.weight});

  DetectionLossOptions opt;
  opt.lambda_iou = cfg.lambda_iou;
  opt.lambda_l1 = cfg.lambda_l1;
  const DetectionLossResult loss = detection_loss(pred, truth, opt);

  CsvDoc doc;
  stamp(doc, cfg, "detloss");
  doc.metadata.emplace_back("total", format_double(loss.total));
  doc.metadata.emplace_back("lambda_iou", format_double(cfg.lambda_iou));
  doc.metadata.emplace_back("lambda_l1", format_double(cfg.lambda_l1));
  doc.header = {"truth_index", "pred_index", "truth_id", "pred_id",
                "class_nll",   "giou_loss",  "l1",       "box_gated",
                "weighted_total"};
  for (const DetectionLossPair& p : loss.pairs) {
    doc.rows.push_back({std::to_string(p.truth), std::to_string(p.pred),
                        truth_boxes[p.truth].id, pred_boxes[p.pred].id,
                        format_double(p.class_nll), format_double(p.giou_loss),
                        format_double(p.l1), p.box_gated ? "1" : "0",
                        format_double(p.weighted_total)});
  }

  DetLossResult result;
  result.total = loss.total;
  result.matched_pairs = static_cast<int>(loss.pairs.size());
  result.breakdown_path = out_file(out_dir, "detloss.csv");
  write_csv(result.breakdown_path, doc);
  return result;
}

}  // namespace vfa
