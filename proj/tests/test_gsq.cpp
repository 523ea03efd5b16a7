#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vfa/gsq.hpp"
#include "vfa/rng.hpp"
#include "vfa/tape.hpp"

using namespace vfa;

namespace {

const GsqThresholds kTh;  // defaults: 0.20 / 0.25 / 0.40, tau 0.02

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

// Margin of a profile to every grade threshold and morphology surface.
double decision_margin(double mpr, double mar, const GsqThresholds& th) {
  const double s = severity_score(profile_from_ratios(mpr, mar), th);
  double m = std::abs(mpr - 1.0);
  m = std::min(m, std::abs(mar - 1.0));
  m = std::min(m, std::abs(s - th.tol_normal));
  m = std::min(m, std::abs(s - th.tol_mild));
  m = std::min(m, std::abs(s - th.tol_moderate));
  return m;
}

// Smallest gap between the arguments of any hard min/max in the fuzzy
// rules, in sigmoid space; FD gradient checks stay away from these kinks.
double tie_margin(double mpr, double mar, const GsqThresholds& th) {
  const FuzzyDetail d = fuzzy_detail(profile_from_ratios(mpr, mar), th);
  const double s = d.soft_severity, tau = th.tau;
  const auto sg = [&](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double deformed = sg((s - th.tol_normal) / tau);
  const double intact = sg((th.tol_normal - s) / tau);
  const double ml = sg((1.0 - mpr) / tau), mh = sg((mpr - 1.0) / tau);
  const double al = sg((1.0 - mar) / tau), ah = sg((mar - 1.0) / tau);
  double m = std::abs(sg((s - th.tol_normal) / tau) - sg((th.tol_mild - s) / tau));
  m = std::min(m, std::abs(sg((s - th.tol_mild) / tau) - sg((th.tol_moderate - s) / tau)));
  m = std::min(m, std::abs(ml - ah));
  m = std::min(m, std::abs(deformed - std::min(ml, ah)));
  m = std::min(m, std::abs(mh - al));
  m = std::min(m, std::abs(deformed - std::min(mh, al)));
  m = std::min(m, std::abs(ml - al));
  m = std::min(m, std::abs(deformed - std::min(ml, al)));
  m = std::min(m, std::abs(mh - ah));
  m = std::min(m, std::abs(intact - std::min(mh, ah)));
  return m;
}

}  // namespace

TEST_CASE("severity score examples") {
  CHECK(severity_score(profile_from_ratios(1.0, 1.0), kTh) == 0.0);

  const RatioProfile wedge = compute_ratios(1.0, 0.85, 0.7);
  CHECK(severity_score(wedge, kTh) == doctest::Approx(0.85 / 0.7 - 0.85).epsilon(1e-12));

  CHECK(severity_score(profile_from_ratios(0.7, 0.7), kTh) ==
        doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("severity hexagon edges") {
  // Left/bottom edges at ratio 0.8, diagonal edges at |mpr - mar| = 0.2.
  CHECK(severity_score(profile_from_ratios(0.8, 0.9), kTh) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(severity_score(profile_from_ratios(0.9, 0.8), kTh) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK(severity_score(profile_from_ratios(0.9, 1.1), kTh) ==
        doctest::Approx(0.2).epsilon(1e-12));

  // Convex region: flat zero by default, graded when convex_graded is set.
  GsqThresholds convex = kTh;
  convex.convex_graded = true;
  CHECK(severity_score(profile_from_ratios(1.3, 1.3), kTh) == 0.0);
  CHECK(severity_score(profile_from_ratios(1.3, 1.3), convex) ==
        doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("crisp grade bands with closed-left boundaries") {
  CHECK(grade_from_severity(0.0, kTh) == Grade::normal);
  CHECK(grade_from_severity(0.1999, kTh) == Grade::normal);
  CHECK(grade_from_severity(0.20, kTh) == Grade::mild);
  CHECK(grade_from_severity(0.25, kTh) == Grade::moderate);
  CHECK(grade_from_severity(0.40, kTh) == Grade::severe);

  CHECK(crisp_grade(compute_ratios(1.0, 0.85, 0.7), kTh) == Grade::moderate);
  CHECK(crisp_grade(profile_from_ratios(0.8, 0.8), kTh) == Grade::mild);  // s exactly 0.2
}

TEST_CASE("crisp morphology quadrants and tie-breaks") {
  CHECK(crisp_morphology(profile_from_ratios(0.4, 1.2), kTh) == Morphology::wedge);
  CHECK(crisp_morphology(profile_from_ratios(0.5, 0.3), kTh) == Morphology::concave);
  CHECK(crisp_morphology(profile_from_ratios(1.0, 1.0), kTh) == Morphology::normal);
  CHECK(crisp_morphology(profile_from_ratios(1.25, 0.5), kTh) == Morphology::crush);

  // Convex rule: both ratios above 1 stay normal regardless of severity.
  CHECK(crisp_morphology(profile_from_ratios(1.4, 1.05), kTh) == Morphology::normal);

  // Exact-equality tie-breaks.
  CHECK(crisp_morphology(profile_from_ratios(1.0, 0.5), kTh) == Morphology::concave);
  CHECK(crisp_morphology(profile_from_ratios(0.5, 1.0), kTh) == Morphology::concave);
  CHECK(crisp_morphology(profile_from_ratios(1.0, 1.3), kTh) == Morphology::normal);
  CHECK(crisp_morphology(profile_from_ratios(1.3, 1.0), kTh) == Morphology::normal);
}

TEST_CASE("fuzzy posterior far from all thresholds is nearly crisp") {
  const ClassPosterior p = fuzzy_memberships(profile_from_ratios(1.0, 1.0), kTh);
  CHECK(p.grade[0] > 0.99);
  CHECK(p.morphology[0] > 0.99);
  p.validate();
  CHECK(p.provenance == Provenance::fuzzy);
}

TEST_CASE("raw band sigmoids are exactly 1/2 at a threshold") {
  const auto raw = grade_memberships_from_severity(kTh.tol_normal, kTh);
  CHECK(raw[0] == 0.5);
  CHECK(raw[1] == 0.5);
}

TEST_CASE("fuzzy probabilities are valid and group-normalized") {
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double mpr = rng.uniform(0.2, 1.5);
    const double mar = rng.uniform(0.2, 1.5);
    const ClassPosterior p = fuzzy_memberships(profile_from_ratios(mpr, mar), kTh);
    double gsum = 0.0, msum = 0.0;
    for (int c = 0; c < 4; ++c) {
      CHECK(p.grade[c] > 0.0);
      CHECK(p.grade[c] < 1.0);
      CHECK(p.morphology[c] > 0.0);
      CHECK(p.morphology[c] < 1.0);
      gsum += p.grade[c];
      msum += p.morphology[c];
    }
    CHECK(gsum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(msum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("crisp/fuzzy argmax agreement away from decision surfaces") {
  for (double tau : {0.05, 0.02, 0.005}) {
    GsqThresholds th = kTh;
    th.tau = tau;
    Rng rng(static_cast<std::uint64_t>(tau * 1e6));
    int checked = 0;
    int agree = 0;
    while (checked < 10000) {
      const double mpr = rng.uniform(0.2, 1.5);
      const double mar = rng.uniform(0.2, 1.5);
      if (decision_margin(mpr, mar, th) <= 2.0 * tau) continue;
      const RatioProfile r = profile_from_ratios(mpr, mar);
      const ClassPosterior fz = fuzzy_memberships(r, th);
      const bool g_ok = fz.grade_argmax() == crisp_grade(r, th);
      const bool m_ok = fz.morphology_argmax() == crisp_morphology(r, th);
      agree += g_ok && m_ok;
      ++checked;
    }
    CHECK(agree == checked);
  }
}

TEST_CASE("fuzzy_with_gradient matches the ratio-path posterior exactly") {
  const FuzzyGradientResult res = fuzzy_with_gradient(kWedge, kTh);
  const ClassPosterior direct = fuzzy_memberships(ratios_from_keypoints(kWedge), kTh);
  for (int c = 0; c < 4; ++c) {
    CHECK(res.posterior.grade[c] == direct.grade[c]);
    CHECK(res.posterior.morphology[c] == direct.morphology[c]);
  }
  CHECK(res.gradients.tape_nodes > 12);
}

TEST_CASE("unit rectangle: symmetric middle-point gradients") {
  const FuzzyGradientResult res = fuzzy_with_gradient(kUnitRect, kTh);
  // Columns 3 and 9 are um.y and lm.y.
  const double d_um = res.gradients.grade[0][3];
  const double d_lm = res.gradients.grade[0][9];
  CHECK(d_um == doctest::Approx(-d_lm).epsilon(1e-12));
  CHECK(std::abs(d_um) > 0.0);
}

TEST_CASE("gradients match central finite differences") {
  const auto fd_check = [&](const VertebraKeypoints& kp, double tol) {
    const FuzzyGradientResult res = fuzzy_with_gradient(kp, kTh);
    double worst = 0.0;
    for (int c = 0; c < 4; ++c) {
      for (int i = 0; i < 12; ++i) {
        const auto eval_grade = [&](double v) {
          VertebraKeypoints k2 = kp;
          k2.pts[i / 2].*(i % 2 == 0 ? &Point::x : &Point::y) = v;
          return fuzzy_memberships(ratios_from_keypoints(k2), kTh).grade[c];
        };
        const auto eval_morph = [&](double v) {
          VertebraKeypoints k2 = kp;
          k2.pts[i / 2].*(i % 2 == 0 ? &Point::x : &Point::y) = v;
          return fuzzy_memberships(ratios_from_keypoints(k2), kTh).morphology[c];
        };
        const double x0 = i % 2 == 0 ? kp.pts[i / 2].x : kp.pts[i / 2].y;
        worst = std::max(worst, oracles::rel_err(res.gradients.grade[c][i],
                                                 oracles::central_diff(eval_grade, x0)));
        worst = std::max(worst, oracles::rel_err(res.gradients.morphology[c][i],
                                                 oracles::central_diff(eval_morph, x0)));
      }
    }
    CHECK(worst < tol);
  };

  fd_check(kWedge, 1e-5);

  Rng rng(5);
  int done = 0;
  while (done < 20) {
    const double w = rng.uniform(30.0, 80.0), h = rng.uniform(60.0, 120.0);
    VertebraKeypoints kp;
    kp.pts = {Point{0, 0}, Point{w / 2, 0}, Point{w, 0},
              Point{0, h}, Point{w / 2, h}, Point{w, h}};
    for (Point& p : kp.pts) {
      p.x += rng.uniform(-10.0, 10.0);
      p.y += rng.uniform(-10.0, 10.0);
    }
    const RatioProfile r = ratios_from_keypoints(kp);
    if (r.mpr < 0.2 || r.mpr > 1.5 || r.mar < 0.2 || r.mar > 1.5) continue;
    if (tie_margin(r.mpr, r.mar, kTh) < 1e-3) continue;
    fd_check(kp, 1e-5);
    ++done;
  }
}

TEST_CASE("exact mpr == mar tie keeps a finite first-argument subgradient") {
  // Equal posterior and anterior heights of exactly 1, so mpr and mar are
  // the same double; the concave min and the |mpr - mar| terms all tie.
  const VertebraKeypoints kp =
      make_kp({{0, 0}, {1, 0.15}, {2, 0}, {0, 1}, {1, 0.85}, {2, 1}});
  const RatioProfile r = ratios_from_keypoints(kp);
  REQUIRE(r.mpr == r.mar);
  const FuzzyGradientResult res = fuzzy_with_gradient(kp, kTh);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 12; ++i) {
      CHECK(std::isfinite(res.gradients.grade[c][i]));
      CHECK(std::isfinite(res.gradients.morphology[c][i]));
    }
  const ClassPosterior direct = fuzzy_memberships(r, kTh);
  for (int c = 0; c < 4; ++c) CHECK(res.posterior.grade[c] == direct.grade[c]);
}

TEST_CASE("fuzzy posterior is scale invariant, gradients scale as 1/s") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = rng.uniform(30.0, 80.0), h = rng.uniform(60.0, 120.0);
    VertebraKeypoints kp;
    kp.pts = {Point{0, 0}, Point{w / 2, 0}, Point{w, 0},
              Point{0, h}, Point{w / 2, h}, Point{w, h}};
    for (Point& p : kp.pts) {
      p.x += rng.uniform(-10.0, 10.0);
      p.y += rng.uniform(-10.0, 10.0);
    }
    const double s = rng.uniform(0.5, 4.0);
    VertebraKeypoints scaled = kp;
    for (Point& p : scaled.pts) {
      p.x *= s;
      p.y *= s;
    }
    const FuzzyGradientResult a = fuzzy_with_gradient(kp, kTh);
    const FuzzyGradientResult b = fuzzy_with_gradient(scaled, kTh);
    for (int c = 0; c < 4; ++c) {
      CHECK(b.posterior.grade[c] == doctest::Approx(a.posterior.grade[c]).epsilon(1e-9));
      for (int i = 0; i < 12; ++i)
        CHECK(b.gradients.grade[c][i] ==
              doctest::Approx(a.gradients.grade[c][i] / s).epsilon(1e-6));
    }
  }
}

TEST_CASE("combine_posterior") {
  SUBCASE("uniform image posterior cancels") {
    const std::vector<double> p = {0.7, 0.1, 0.15, 0.05};
    const std::vector<double> u = {0.25, 0.25, 0.25, 0.25};
    const std::vector<double> out = combine(p, u);
    for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }
  SUBCASE("one-hot stays one-hot under strictly positive factors") {
    const std::vector<double> p = {0.0, 1.0, 0.0, 0.0};
    const std::vector<double> q = {0.2, 0.3, 0.4, 0.1};
    const std::vector<double> out = combine(p, q);
    CHECK(out[1] == 1.0);
    CHECK(out[0] == 0.0);
  }
  SUBCASE("two-class worked example") {
    const std::vector<double> out = combine({0.6, 0.4}, {0.5, 0.5});
    CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(combine({0.5, 0.5}, {1.0, 0.0, 0.0}), ClassMismatch);
  }
  SUBCASE("posterior-level combine") {
    ClassPosterior kps = fuzzy_memberships(profile_from_ratios(0.7, 1.2), kTh);
    ClassPosterior img;
    img.grade = {0.25, 0.25, 0.25, 0.25};
    img.morphology = {0.25, 0.25, 0.25, 0.25};
    const ClassPosterior out = combine_posterior(kps, img);
    for (int c = 0; c < 4; ++c)
      CHECK(out.grade[c] == doctest::Approx(kps.grade[c]).epsilon(1e-12));
  }
}

TEST_CASE("weighted cross-entropy loss") {
  const std::vector<double> w1 = {1.0, 1.0, 1.0, 1.0};

  CeItem perfect;
  perfect.p_kps = {0.0, 1.0, 0.0, 0.0};
  perfect.true_class = 1;
  CHECK(weighted_ce_loss({perfect}, w1, 1.0, 0.0) == 0.0);

  CeItem e1;
  e1.p_kps = {std::exp(-1.0), 0.0, 0.0, 0.0};
  e1.true_class = 0;
  CHECK(weighted_ce_loss({e1}, w1, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

  const double separate =
      weighted_ce_loss({perfect}, w1, 1.0, 0.0) + weighted_ce_loss({e1}, w1, 1.0, 0.0);
  CHECK(weighted_ce_loss({perfect, e1}, w1, 1.0, 0.0) ==
        doctest::Approx(separate).epsilon(1e-12));

  SUBCASE("image term and lambda gating") {
    CeItem both;
    both.p_kps = {0.5, 0.5, 0.0, 0.0};
    both.p_img = {0.25, 0.75, 0.0, 0.0};
    both.true_class = 0;
    const double kps_only = -std::log(0.5);
    const double img_only = -std::log(0.25);
    CHECK(weighted_ce_loss({both}, w1, 1.0, 0.0) == doctest::Approx(kps_only));
    CHECK(weighted_ce_loss({both}, w1, 0.0, 1.0) == doctest::Approx(img_only));
    CHECK(weighted_ce_loss({both}, w1, 1.0, 1.0) == doctest::Approx(kps_only + img_only));
  }

  SUBCASE("gradient is -w*lambda/p on the true class") {
    CeItem item;
    item.p_kps = {0.3, 0.2, 0.4, 0.1};
    item.true_class = 2;
    const std::vector<double> w = {1.0, 2.0, 3.0, 4.0};
    CeGradients grads;
    weighted_ce_loss({item}, w, 0.7, 0.0, &grads);
    CHECK(grads.d_p_kps[0][2] == doctest::Approx(-3.0 * 0.7 / 0.4).epsilon(1e-12));
    CHECK(grads.d_p_kps[0][0] == 0.0);
  }

  SUBCASE("empty batch") {
    CHECK_THROWS_AS(weighted_ce_loss({}, w1, 1.0, 1.0), EmptyBatch);
  }

  SUBCASE("weights scale linearly") {
    CeItem item;
    item.p_kps = {0.5, 0.5, 0.0, 0.0};
    item.true_class = 0;
    const std::vector<double> w2 = {2.0, 1.0, 1.0, 1.0};
    CHECK(weighted_ce_loss({item}, w2, 1.0, 0.0) ==
          doctest::Approx(2.0 * weighted_ce_loss({item}, w1, 1.0, 0.0)));
  }
}

TEST_CASE("inverse frequency weights") {
  const std::vector<double> w = inverse_frequency_weights({100, 10, 10, 5});
  CHECK(w[3] == doctest::Approx(20.0 * w[0]).epsilon(1e-12));
  CHECK((w[0] + w[1] + w[2] + w[3]) / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decision-border layout probes") {
  // Fig-style layout: wedge upper-left, crush lower-right, concave
  // lower-left, nested grade bands on the deficit side.
  CHECK(crisp_morphology(profile_from_ratios(0.4, 1.2), kTh) == Morphology::wedge);
  CHECK(crisp_morphology(profile_from_ratios(1.2, 0.5), kTh) == Morphology::crush);
  CHECK(crisp_morphology(profile_from_ratios(0.5, 0.3), kTh) == Morphology::concave);
  CHECK(crisp_morphology(profile_from_ratios(1.25, 1.2), kTh) == Morphology::normal);

  CHECK(crisp_grade(profile_from_ratios(0.85, 0.85), kTh) == Grade::normal);
  CHECK(crisp_grade(profile_from_ratios(0.78, 0.78), kTh) == Grade::mild);
  CHECK(crisp_grade(profile_from_ratios(0.70, 0.70), kTh) == Grade::moderate);
  CHECK(crisp_grade(profile_from_ratios(0.55, 0.55), kTh) == Grade::severe);
}

TEST_CASE("threshold validation") {
  GsqThresholds bad = kTh;
  bad.tol_mild = 0.1;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = kTh;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
