#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vfa/geometry.hpp"
#include "vfa/gsq.hpp"
#include "vfa/synthdata.hpp"
#include "vfa/textio.hpp"

namespace vfa {

// One row of the annotation CSV. Empty coordinate cells mark missing
// keypoints; the optional columns (image posterior, imputed mask, reader)
// may be absent from a file altogether.
struct AnnotationRecord {
  std::string patient_id;
  std::string level;
  VertebraKeypoints keypoints;
  std::array<bool, kNumLandmarks> imputed{};
  std::optional<Grade> grade;
  std::optional<Morphology> morphology;
  std::optional<std::array<double, kNumGrades>> pimg_grade;
  std::optional<std::array<double, kNumMorphologies>> pimg_morph;
  std::string reader_id;
  int line = 0;  // source line, for reject reports; not written back
};

struct AnnotationFile {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<AnnotationRecord> records;
  std::vector<std::pair<int, std::string>> rejects;  // (line, reason)
};

// Header: patient_id,level,<12 coordinate columns>,grade,morphology, then
// optional imputed / pimg_* / reader_id columns (written when any record
// uses them, accepted in any case).
AnnotationFile parse_annotations(const std::string& text);
AnnotationFile read_annotations(const std::string& path);
std::string annotations_to_string(const AnnotationFile& file);
void write_annotations(const std::string& path, const AnnotationFile& file);

AnnotationFile annotations_from_cohort(const Cohort& cohort);
Cohort cohort_from_annotations(const AnnotationFile& file);  // throws on unlabeled rows

// Box CSV for the detection-loss harness: id,cx,cy,w,h,score[,weight] or
// corner columns id,x1,y1,x2,y2,score[,weight].
struct BoxRecord {
  std::string id;
  double cx = 0.0, cy = 0.0, w = 1.0, h = 1.0;
  double score = 1.0;
  double weight = 1.0;
};

std::vector<BoxRecord> read_boxes(const std::string& path);
void write_boxes(const std::string& path, const std::vector<BoxRecord>& boxes);

}  // namespace vfa
