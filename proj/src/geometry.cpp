#include "vfa/geometry.hpp"

#include <string>

namespace vfa {

bool VertebraKeypoints::all_present() const {
  for (bool p : present)
    if (!p) return false;
  return true;
}

void VertebraKeypoints::validate_full() const {
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (!present[i]) throw MissingKeypoint(std::string("missing keypoint ") + kLandmarkNames[i]);
    if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y))
      throw MissingKeypoint(std::string("non-finite keypoint ") + kLandmarkNames[i]);
  }
  // Canonical orientation: y grows downward, so upper landmarks must have
  // strictly smaller y than their lower counterparts.
  for (int i = 0; i < 3; ++i) {
    if (!(pts[i].y < pts[i + 3].y))
      throw InvalidOrientation(std::string("upper landmark ") + kLandmarkNames[i] +
                               " not above " + kLandmarkNames[i + 3]);
  }
}

std::array<double, 12> VertebraKeypoints::flat() const {
  std::array<double, 12> out{};
  for (int i = 0; i < kNumLandmarks; ++i) {
    out[2 * i] = pts[i].x;
    out[2 * i + 1] = pts[i].y;
  }
  return out;
}

Heights compute_heights(const VertebraKeypoints& kp, double height_floor) {
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (!kp.present[i])
      throw MissingKeypoint(std::string("missing keypoint ") + kLandmarkNames[i]);
    if (!std::isfinite(kp.pts[i].x) || !std::isfinite(kp.pts[i].y))
      throw MissingKeypoint(std::string("non-finite keypoint ") + kLandmarkNames[i]);
  }
  Heights h;
  const auto& p = kp.pts;
  h.h_p = detail::pair_height(p[0].x, p[0].y, p[3].x, p[3].y);
  h.h_m = detail::pair_height(p[1].x, p[1].y, p[4].x, p[4].y);
  h.h_a = detail::pair_height(p[2].x, p[2].y, p[5].x, p[5].y);
  if (h.h_p < height_floor || h.h_m < height_floor || h.h_a < height_floor)
    throw DegenerateVertebra("vertebra height below floor");
  return h;
}

RatioProfile compute_ratios(double h_p, double h_m, double h_a) {
  if (!(h_p > 0.0) || !(h_m > 0.0) || !(h_a > 0.0))
    throw DegenerateVertebra("non-positive height");
  RatioProfile r;
  r.h_p = h_p;
  r.h_m = h_m;
  r.h_a = h_a;
  r.apr = h_a / h_p;
  r.mpr = h_m / h_p;
  r.mar = h_m / h_a;
  return r;
}

RatioProfile compute_ratios(const Heights& h) { return compute_ratios(h.h_p, h.h_m, h.h_a); }

RatioProfile ratios_from_keypoints(const VertebraKeypoints& kp) {
  return compute_ratios(compute_heights(kp));
}

RatioProfile profile_from_ratios(double mpr, double mar) {
  return compute_ratios(1.0, mpr, mpr / mar);
}

}  // namespace vfa
