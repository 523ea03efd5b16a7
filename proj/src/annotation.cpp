#include "vfa/annotation.hpp"

#include <algorithm>

namespace vfa {

namespace {

const char* kCoordColumns[12] = {"up_x", "up_y", "um_x", "um_y", "ua_x", "ua_y",
                                 "lp_x", "lp_y", "lm_x", "lm_y", "la_x", "la_y"};
const char* kPimgGradeColumns[4] = {"pimg_normal", "pimg_mild", "pimg_moderate",
                                    "pimg_severe"};
const char* kPimgMorphColumns[4] = {"pimg_morph_normal", "pimg_morph_wedge",
                                    "pimg_morph_crush", "pimg_morph_concave"};

std::string imputed_mask(const std::array<bool, kNumLandmarks>& imputed) {
  std::string s(kNumLandmarks, '0');
  bool any = false;
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (imputed[i]) {
      s[i] = '1';
      any = true;
    }
  }
  return any ? s : std::string();
}

}  // namespace

AnnotationFile parse_annotations(const std::string& text) {
  const CsvDoc doc = parse_csv(text);
  AnnotationFile out;
  out.metadata = doc.metadata;
  for (const auto& [line, reason] : doc.malformed) out.rejects.emplace_back(line, reason);
  if (doc.header.empty()) return out;

  const int c_patient = doc.column("patient_id");
  const int c_level = doc.column("level");
  if (c_patient < 0 || c_level < 0)
    throw ParseError("annotation file must have patient_id and level columns");
  int c_coord[12];
  for (int i = 0; i < 12; ++i) {
    c_coord[i] = doc.column(kCoordColumns[i]);
    if (c_coord[i] < 0)
      throw ParseError(std::string("annotation file missing column ") + kCoordColumns[i]);
  }
  const int c_grade = doc.column("grade");
  const int c_morph = doc.column("morphology");
  const int c_imputed = doc.column("imputed");
  const int c_reader = doc.column("reader_id");
  int c_pg[4], c_pm[4];
  bool have_pg = true, have_pm = true;
  for (int i = 0; i < 4; ++i) {
    c_pg[i] = doc.column(kPimgGradeColumns[i]);
    c_pm[i] = doc.column(kPimgMorphColumns[i]);
    have_pg = have_pg && c_pg[i] >= 0;
    have_pm = have_pm && c_pm[i] >= 0;
  }

  for (std::size_t ri = 0; ri < doc.rows.size(); ++ri) {
    const auto& row = doc.rows[ri];
    const int lineno = doc.row_lines[ri];
    try {
      AnnotationRecord rec;
      rec.line = lineno;
      rec.patient_id = trim(row[c_patient]);
      rec.level = trim(row[c_level]);
      if (rec.patient_id.empty()) throw ParseError("empty patient_id");
      if (rec.level.empty()) throw ParseError("empty level");
      for (int i = 0; i < kNumLandmarks; ++i) {
        const std::string xs = trim(row[c_coord[2 * i]]);
        const std::string ys = trim(row[c_coord[2 * i + 1]]);
        if (xs.empty() != ys.empty())
          throw ParseError(std::string("half-missing keypoint ") + kLandmarkNames[i]);
        if (xs.empty()) {
          rec.keypoints.present[i] = false;
        } else {
          rec.keypoints.pts[i] = {parse_double(xs), parse_double(ys)};
          if (!std::isfinite(rec.keypoints.pts[i].x) || !std::isfinite(rec.keypoints.pts[i].y))
            throw ParseError(std::string("non-finite keypoint ") + kLandmarkNames[i]);
        }
      }
      if (c_grade >= 0 && !trim(row[c_grade]).empty())
        rec.grade = grade_from_string(trim(row[c_grade]));
      if (c_morph >= 0 && !trim(row[c_morph]).empty())
        rec.morphology = morphology_from_string(trim(row[c_morph]));
      if (c_imputed >= 0) {
        const std::string mask = trim(row[c_imputed]);
        if (!mask.empty()) {
          if (mask.size() != kNumLandmarks) throw ParseError("imputed mask must have 6 flags");
          for (int i = 0; i < kNumLandmarks; ++i) {
            if (mask[i] != '0' && mask[i] != '1') throw ParseError("imputed mask must be 0/1");
            rec.imputed[i] = mask[i] == '1';
          }
        }
      }
      if (have_pg && !trim(row[c_pg[0]]).empty()) {
        std::array<double, 4> p{};
        for (int i = 0; i < 4; ++i) p[i] = parse_double(row[c_pg[i]]);
        rec.pimg_grade = p;
      }
      if (have_pm && !trim(row[c_pm[0]]).empty()) {
        std::array<double, 4> p{};
        for (int i = 0; i < 4; ++i) p[i] = parse_double(row[c_pm[i]]);
        rec.pimg_morph = p;
      }
      if (c_reader >= 0) rec.reader_id = trim(row[c_reader]);
      out.records.push_back(std::move(rec));
    } catch (const InputError& e) {
      out.rejects.emplace_back(lineno, e.what());
    }
  }
  return out;
}

AnnotationFile read_annotations(const std::string& path) {
  return parse_annotations(read_file(path));
}

std::string annotations_to_string(const AnnotationFile& file) {
  bool any_imputed = false, any_pg = false, any_pm = false, any_reader = false;
  for (const AnnotationRecord& r : file.records) {
    for (bool b : r.imputed) any_imputed = any_imputed || b;
    any_pg = any_pg || r.pimg_grade.has_value();
    any_pm = any_pm || r.pimg_morph.has_value();
    any_reader = any_reader || !r.reader_id.empty();
  }

  CsvDoc doc;
  doc.metadata = file.metadata;
  doc.header = {"patient_id", "level"};
  for (const char* c : kCoordColumns) doc.header.push_back(c);
  doc.header.push_back("grade");
  doc.header.push_back("morphology");
  if (any_imputed) doc.header.push_back("imputed");
  if (any_pg)
    for (const char* c : kPimgGradeColumns) doc.header.push_back(c);
  if (any_pm)
    for (const char* c : kPimgMorphColumns) doc.header.push_back(c);
  if (any_reader) doc.header.push_back("reader_id");

  for (const AnnotationRecord& r : file.records) {
    std::vector<std::string> row = {r.patient_id, r.level};
    for (int i = 0; i < kNumLandmarks; ++i) {
      if (r.keypoints.present[i]) {
        row.push_back(format_double(r.keypoints.pts[i].x));
        row.push_back(format_double(r.keypoints.pts[i].y));
      } else {
        row.emplace_back();
        row.emplace_back();
      }
    }
    row.push_back(r.grade ? to_string(*r.grade) : "");
    row.push_back(r.morphology ? to_string(*r.morphology) : "");
    if (any_imputed) row.push_back(imputed_mask(r.imputed));
    if (any_pg) {
      for (int i = 0; i < 4; ++i)
        row.push_back(r.pimg_grade ? format_double((*r.pimg_grade)[i]) : "");
    }
    if (any_pm) {
      for (int i = 0; i < 4; ++i)
        row.push_back(r.pimg_morph ? format_double((*r.pimg_morph)[i]) : "");
    }
    if (any_reader) row.push_back(r.reader_id);
    doc.rows.push_back(std::move(row));
  }
  return csv_to_string(doc);
}

void write_annotations(const std::string& path, const AnnotationFile& file) {
  write_file(path, annotations_to_string(file));
}

AnnotationFile annotations_from_cohort(const Cohort& cohort) {
  AnnotationFile out;
  out.records.reserve(cohort.vertebrae.size());
  for (const CohortVertebra& v : cohort.vertebrae) {
    AnnotationRecord r;
    r.patient_id = v.patient_id;
    r.level = v.level;
    r.keypoints = v.keypoints;
    r.imputed = v.imputed;
    r.grade = v.grade;
    r.morphology = v.morphology;
    out.records.push_back(std::move(r));
  }
  return out;
}

Cohort cohort_from_annotations(const AnnotationFile& file) {
  Cohort out;
  out.vertebrae.reserve(file.records.size());
  for (const AnnotationRecord& r : file.records) {
    CohortVertebra v;
    v.patient_id = r.patient_id;
    v.level = r.level;
    v.keypoints = r.keypoints;
    v.imputed = r.imputed;
    if (!r.grade || !r.morphology)
      throw InputError("cohort rows need grade and morphology labels (" + r.patient_id +
                       "/" + r.level + ")");
    v.grade = *r.grade;
    v.morphology = *r.morphology;
    out.vertebrae.push_back(std::move(v));
  }
  return out;
}

std::vector<BoxRecord> read_boxes(const std::string& path) {
  const CsvDoc doc = read_csv(path);
  if (!doc.malformed.empty())
    throw ParseError(path + ": malformed row at line " +
                     std::to_string(doc.malformed.front().first));
  const int c_id = doc.column("id");
  const int c_score = doc.column("score");
  const int c_weight = doc.column("weight");
  const bool center = doc.column("cx") >= 0;
  int c0, c1, c2, c3;
  if (center) {
    c0 = doc.column("cx");
    c1 = doc.column("cy");
    c2 = doc.column("w");
    c3 = doc.column("h");
  } else {
    c0 = doc.column("x1");
    c1 = doc.column("y1");
    c2 = doc.column("x2");
    c3 = doc.column("y2");
  }
  if (c0 < 0 || c1 < 0 || c2 < 0 || c3 < 0)
    throw ParseError(path + ": box file needs cx,cy,w,h or x1,y1,x2,y2 columns");

  std::vector<BoxRecord> out;
  for (const auto& row : doc.rows) {
    BoxRecord b;
    if (c_id >= 0) b.id = trim(row[c_id]);
    const double v0 = parse_double(row[c0]);
    const double v1 = parse_double(row[c1]);
    const double v2 = parse_double(row[c2]);
    const double v3 = parse_double(row[c3]);
    if (center) {
      b.cx = v0;
      b.cy = v1;
      b.w = v2;
      b.h = v3;
    } else {
      b.cx = (v0 + v2) / 2.0;
      b.cy = (v1 + v3) / 2.0;
      b.w = v2 - v0;
      b.h = v3 - v1;
    }
    if (c_score >= 0) b.score = parse_double(row[c_score]);
    if (c_weight >= 0 && !trim(row[c_weight]).empty()) b.weight = parse_double(row[c_weight]);
    out.push_back(std::move(b));
  }
  return out;
}

void write_boxes(const std::string& path, const std::vector<BoxRecord>& boxes) {
  CsvDoc doc;
  doc.header = {"id", "cx", "cy", "w", "h", "score", "weight"};
  for (const BoxRecord& b : boxes) {
    doc.rows.push_back({b.id, format_double(b.cx), format_double(b.cy), format_double(b.w),
                        format_double(b.h), format_double(b.score), format_double(b.weight)});
  }
  write_csv(path, doc);
}

}  // namespace vfa
