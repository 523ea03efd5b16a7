#include <doctest.h>

#include <cmath>

#include "vfa/geometry.hpp"
#include "vfa/rng.hpp"

using namespace vfa;

namespace {

VertebraKeypoints make_kp(std::initializer_list<Point> pts) {
  VertebraKeypoints kp;
  int i = 0;
  for (const Point& p : pts) kp.pts[i++] = p;
  return kp;
}

const VertebraKeypoints kUnitRect =
    make_kp({{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}});
const VertebraKeypoints kWedge =
    make_kp({{0, 0}, {1, 0.15}, {2, 0.3}, {0, 1}, {1, 1}, {2, 1}});

VertebraKeypoints random_vertebra(Rng& rng) {
  VertebraKeypoints kp;
  const double w = rng.uniform(30.0, 80.0), h = rng.uniform(60.0, 120.0);
  kp.pts = {Point{0, 0}, Point{w / 2, 0}, Point{w, 0},
            Point{0, h}, Point{w / 2, h}, Point{w, h}};
  for (Point& p : kp.pts) {
    p.x += rng.uniform(-8.0, 8.0);
    p.y += rng.uniform(-8.0, 8.0);
  }
  return kp;
}

}  // namespace

TEST_CASE("heights of the unit rectangle") {
  const Heights h = compute_heights(kUnitRect);
  CHECK(h.h_p == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h.h_m == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h.h_a == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("heights of the wedge example") {
  const Heights h = compute_heights(kWedge);
  CHECK(h.h_p == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h.h_m == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(h.h_a == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("missing or non-finite keypoints are rejected") {
  VertebraKeypoints kp = kUnitRect;
  kp.present[2] = false;
  CHECK_THROWS_AS(compute_heights(kp), MissingKeypoint);

  VertebraKeypoints nan_kp = kUnitRect;
  nan_kp.pts[4].y = std::nan("");
  CHECK_THROWS_AS(compute_heights(nan_kp), MissingKeypoint);
}

TEST_CASE("degenerate heights are rejected") {
  VertebraKeypoints kp = kUnitRect;
  kp.pts[3] = kp.pts[0];  // collapse the posterior pair
  CHECK_THROWS_AS(compute_heights(kp), DegenerateVertebra);
}

TEST_CASE("orientation validation rejects flipped vertebrae") {
  VertebraKeypoints kp = kUnitRect;
  std::swap(kp.pts[0], kp.pts[3]);
  CHECK_THROWS_AS(kp.validate_full(), InvalidOrientation);
  CHECK_NOTHROW(kUnitRect.validate_full());
}

TEST_CASE("ratio examples") {
  const RatioProfile unit = compute_ratios(1, 1, 1);
  CHECK(unit.apr == 1.0);
  CHECK(unit.mpr == 1.0);
  CHECK(unit.mar == 1.0);

  const RatioProfile wedge = compute_ratios(1, 0.85, 0.7);
  CHECK(wedge.apr == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(wedge.mpr == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(wedge.mar == doctest::Approx(0.85 / 0.7).epsilon(1e-12));

  const RatioProfile concave = compute_ratios(1, 0.7, 1);
  CHECK(concave.apr == 1.0);
  CHECK(concave.mpr == doctest::Approx(0.7));
  CHECK(concave.mar == doctest::Approx(0.7));

  CHECK_THROWS_AS(compute_ratios(1.0, 0.0, 1.0), DegenerateVertebra);
  CHECK_THROWS_AS(compute_ratios(-1.0, 1.0, 1.0), DegenerateVertebra);
}

TEST_CASE("ratio consistency identity apr*mar = mpr") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double h_p = rng.uniform(10.0, 200.0);
    const double h_m = rng.uniform(10.0, 200.0);
    const double h_a = rng.uniform(10.0, 200.0);
    const RatioProfile r = compute_ratios(h_p, h_m, h_a);
    CHECK(std::abs(r.apr * r.mar - r.mpr) <= 1e-12 * std::abs(r.mpr));
  }
}

TEST_CASE("heights invariant under rigid motion, equivariant under scaling") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const VertebraKeypoints kp = random_vertebra(rng);
    const Heights base = compute_heights(kp);

    const double tx = rng.uniform(-500.0, 500.0), ty = rng.uniform(-500.0, 500.0);
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double s = rng.uniform(0.1, 10.0);

    VertebraKeypoints moved = kp, scaled = kp;
    for (int i = 0; i < kNumLandmarks; ++i) {
      const Point& p = kp.pts[i];
      moved.pts[i] = {ca * p.x - sa * p.y + tx, sa * p.x + ca * p.y + ty};
      scaled.pts[i] = {s * p.x, s * p.y};
    }
    const Heights hm = compute_heights(moved);
    const Heights hs = compute_heights(scaled);

    CHECK(hm.h_p == doctest::Approx(base.h_p).epsilon(1e-9));
    CHECK(hm.h_m == doctest::Approx(base.h_m).epsilon(1e-9));
    CHECK(hm.h_a == doctest::Approx(base.h_a).epsilon(1e-9));

    CHECK(hs.h_p == doctest::Approx(s * base.h_p).epsilon(1e-9));
    CHECK(hs.h_m == doctest::Approx(s * base.h_m).epsilon(1e-9));
    CHECK(hs.h_a == doctest::Approx(s * base.h_a).epsilon(1e-9));

    const RatioProfile rb = compute_ratios(base);
    const RatioProfile rs = compute_ratios(hs);
    CHECK(rs.apr == doctest::Approx(rb.apr).epsilon(1e-9));
    CHECK(rs.mpr == doctest::Approx(rb.mpr).epsilon(1e-9));
    CHECK(rs.mar == doctest::Approx(rb.mar).epsilon(1e-9));
  }
}

TEST_CASE("ratios_from_keypoints is deterministic") {
  const RatioProfile a = ratios_from_keypoints(kWedge);
  const RatioProfile b = ratios_from_keypoints(kWedge);
  CHECK(a.mpr == b.mpr);
  CHECK(a.mar == b.mar);
  CHECK(a.apr == b.apr);
}
