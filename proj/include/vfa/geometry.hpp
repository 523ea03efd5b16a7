#pragma once

#include <array>
#include <cmath>

#include "vfa/errors.hpp"

namespace vfa {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Landmark order used everywhere a keypoint array or a 12-entry coordinate
// vector appears: upper posterior/middle/anterior, lower posterior/middle/
// anterior. Coordinates are image coordinates, y grows downward.
enum class Landmark : int { up = 0, um = 1, ua = 2, lp = 3, lm = 4, la = 5 };

inline constexpr int kNumLandmarks = 6;
inline constexpr const char* kLandmarkNames[kNumLandmarks] = {"up", "um", "ua",
                                                              "lp", "lm", "la"};

// The six annotated positions of one vertebral body. Points may be marked
// absent (missing annotation pending imputation).
struct VertebraKeypoints {
  std::array<Point, kNumLandmarks> pts{};
  std::array<bool, kNumLandmarks> present{true, true, true, true, true, true};

  Point& operator[](Landmark l) { return pts[static_cast<int>(l)]; }
  const Point& operator[](Landmark l) const { return pts[static_cast<int>(l)]; }

  bool all_present() const;

  // Presence, finiteness, and orientation (each upper point strictly above
  // its lower counterpart in image coordinates). Throws MissingKeypoint /
  // InvalidOrientation. Inputs that fail here are rejected, never reoriented.
  void validate_full() const;

  // Flattened (up.x, up.y, um.x, um.y, ua.x, ua.y, lp.x, lp.y, lm.x, lm.y,
  // la.x, la.y) -- the coordinate order of GradientRecord columns.
  std::array<double, 12> flat() const;
};

struct Heights {
  double h_p = 1.0;
  double h_m = 1.0;
  double h_a = 1.0;
};

// Heights plus the three height ratios. Invariants: positive heights,
// apr = h_a/h_p, mpr = h_m/h_p, mar = h_m/h_a, and apr*mar = mpr to 1e-12
// relative.
struct RatioProfile {
  double h_p = 1.0;
  double h_m = 1.0;
  double h_a = 1.0;
  double apr = 1.0;
  double mpr = 1.0;
  double mar = 1.0;
};

// Annotations with any height under this floor are rejected as collapsed
// rather than allowed to produce unbounded ratios.
inline constexpr double kDegenerateHeightFloor = 1e-6;

Heights compute_heights(const VertebraKeypoints& kp,
                        double height_floor = kDegenerateHeightFloor);

RatioProfile compute_ratios(double h_p, double h_m, double h_a);
RatioProfile compute_ratios(const Heights& h);

// compute_ratios(compute_heights(kp)).
RatioProfile ratios_from_keypoints(const VertebraKeypoints& kp);

// Builds a profile from the two ratios that drive classification (h_p = 1,
// h_m = mpr, h_a = h_m/mar); convenient for tests and border rasters.
RatioProfile profile_from_ratios(double mpr, double mar);

namespace detail {

// Shared numeric kernels, templated so the reverse-mode tape path evaluates
// exactly the same expression tree as the plain double path.
template <class T>
T pair_height(const T& ux, const T& uy, const T& lx, const T& ly) {
  T dx = ux - lx;
  T dy = uy - ly;
  return sqrt(dx * dx + dy * dy);
}

using std::sqrt;

}  // namespace detail

}  // namespace vfa
