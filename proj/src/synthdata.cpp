#include "vfa/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "vfa/rng.hpp"

namespace vfa {

const std::array<const char*, 13> kVertebraLevels = {
    "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T11", "T12", "L1", "L2", "L3", "L4"};

void SynthSpec::validate() const {
  if (!(severity >= 0.0 && severity <= 0.8))
    throw InputError("synth severity must lie in [0, 0.8]");
  if (!(noise_sigma >= 0.0)) throw InputError("noise sigma must be nonnegative");
  if (!(base_height > 0.0) || !(base_width > 0.0))
    throw InputError("base size must be positive");
}

double gsq_severity_for_shape(Morphology shape, double ridge_loss) {
  if (shape == Morphology::normal || shape == Morphology::concave) return ridge_loss;
  // Wedge/crush: the middle ridge loses half the collapsing ridge's loss, so
  // the ratio between the middle and the intact ridge dominates the score.
  return (1.0 - ridge_loss / 2.0) * ridge_loss / (1.0 - ridge_loss);
}

double ridge_loss_for_gsq_severity(Morphology shape, double severity) {
  if (shape == Morphology::normal || shape == Morphology::concave) return severity;
  double lo = 0.0, hi = 0.8;
  if (severity <= 0.0) return 0.0;
  if (severity >= gsq_severity_for_shape(shape, hi))
    throw UnreachableSeverity("grading severity outside the synthesizable range");
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo + hi) / 2.0;
    if (gsq_severity_for_shape(shape, mid) < severity)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2.0;
}

GeneratedVertebra generate_vertebra(const SynthSpec& spec, const GsqThresholds& th) {
  spec.validate();
  th.validate();
  if (spec.morphology == Morphology::normal && spec.severity >= th.tol_normal)
    throw UnreachableSeverity("a normal vertebra cannot carry severity " +
                              std::to_string(spec.severity));

  const double w = spec.base_width, h = spec.base_height, s = spec.severity;
  VertebraKeypoints kp;
  kp.pts = {Point{0.0, 0.0}, Point{w / 2.0, 0.0}, Point{w, 0.0},
            Point{0.0, h},   Point{w / 2.0, h},   Point{w, h}};

  switch (spec.morphology) {
    case Morphology::wedge:
      // Anterior collapse; the middle ridge follows halfway.
      kp[Landmark::ua].y += s * h;
      kp[Landmark::um].y += s * h / 2.0;
      break;
    case Morphology::crush:
      // Posterior collapse, mirrored wedge.
      kp[Landmark::up].y += s * h;
      kp[Landmark::um].y += s * h / 2.0;
      break;
    case Morphology::normal:
    case Morphology::concave:
      // Symmetric middle collapse (a plain rectangle at severity zero).
      kp[Landmark::um].y += s * h / 2.0;
      kp[Landmark::lm].y -= s * h / 2.0;
      break;
  }

  // Rotate about the centroid.
  if (spec.rotation_deg != 0.0) {
    double cx = 0.0, cy = 0.0;
    for (const Point& p : kp.pts) {
      cx += p.x;
      cy += p.y;
    }
    cx /= kNumLandmarks;
    cy /= kNumLandmarks;
    const double a = spec.rotation_deg * 3.14159265358979323846 / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    for (Point& p : kp.pts) {
      const double dx = p.x - cx, dy = p.y - cy;
      p.x = cx + ca * dx - sa * dy;
      p.y = cy + sa * dx + ca * dy;
    }
  }

  GeneratedVertebra out;
  out.clean = kp;
  out.clean_ratios = ratios_from_keypoints(kp);
  out.grade = crisp_grade(out.clean_ratios, th);
  out.morphology = crisp_morphology(out.clean_ratios, th);

  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed);
    for (Point& p : kp.pts) {
      const Point n = rng.normal2();
      p.x += spec.noise_sigma * n.x;
      p.y += spec.noise_sigma * n.y;
    }
  }
  out.keypoints = kp;
  return out;
}

void CohortSpec::validate() const {
  double sum = 0.0;
  for (double p : grade_mix) {
    if (p < 0.0) throw InputError("negative mixture proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("grade mixture must sum to 1");
  if (patients < 1) throw InputError("patient count must be at least 1");
  if (min_vertebrae < 1 || max_vertebrae > 13 || min_vertebrae > max_vertebrae)
    throw InputError("vertebra count range must lie within 1..13");
  if (missing_prob < 0.0 || missing_prob > 1.0)
    throw InputError("missing probability must lie in [0,1]");
}

namespace {

// Severity band sampled for each grade, kept strictly inside the band so
// the recomputed crisp label always matches the drawn one.
void grade_band(Grade g, const GsqThresholds& th, double& lo, double& hi) {
  constexpr double kMargin = 1e-6;
  switch (g) {
    case Grade::normal: lo = 0.0; hi = th.tol_normal - kMargin; break;
    case Grade::mild: lo = th.tol_normal + kMargin; hi = th.tol_mild - kMargin; break;
    case Grade::moderate: lo = th.tol_mild + kMargin; hi = th.tol_moderate - kMargin; break;
    case Grade::severe: lo = th.tol_moderate + kMargin; hi = 0.7; break;
  }
}

}  // namespace

Cohort generate_cohort(const CohortSpec& spec, const GsqThresholds& th) {
  spec.validate();
  th.validate();
  Cohort cohort;
  for (int p = 0; p < spec.patients; ++p) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(p)));
    char id[16];
    std::snprintf(id, sizeof(id), "P%05d", p + 1);

    const int count = rng.uniform_int(spec.min_vertebrae, spec.max_vertebrae);
    std::vector<int> levels(kVertebraLevels.size());
    std::iota(levels.begin(), levels.end(), 0);
    for (std::size_t i = levels.size(); i > 1; --i)
      std::swap(levels[i - 1], levels[rng.next_u64() % i]);
    levels.resize(count);
    std::sort(levels.begin(), levels.end());

    for (int li = 0; li < count; ++li) {
      // Grade from the mixture.
      const double u = rng.uniform();
      double acc = 0.0;
      Grade grade = Grade::severe;
      for (int g = 0; g < kNumGrades; ++g) {
        acc += spec.grade_mix[g];
        if (u < acc) {
          grade = static_cast<Grade>(g);
          break;
        }
      }

      // Deformation style drawn uniformly; normals use the same styles at a
      // severity below the grading tolerance, which keeps their labels normal.
      const Morphology shape = static_cast<Morphology>(1 + rng.uniform_int(0, 2));

      double lo, hi;
      grade_band(grade, th, lo, hi);
      const double target_s = rng.uniform(lo, hi);

      SynthSpec vs;
      vs.morphology = shape;
      vs.severity = ridge_loss_for_gsq_severity(shape, target_s);
      vs.base_height = rng.uniform(spec.min_height, spec.max_height);
      vs.base_width = rng.uniform(spec.min_width, spec.max_width);
      vs.rotation_deg = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
      vs.noise_sigma = spec.noise_sigma;
      vs.seed = rng.next_u64();

      GeneratedVertebra gen = generate_vertebra(vs, th);

      CohortVertebra cv;
      cv.patient_id = id;
      cv.level = kVertebraLevels[levels[li]];
      cv.keypoints = gen.keypoints;
      cv.grade = gen.grade;
      cv.morphology = gen.morphology;
      if (spec.missing_prob > 0.0 && rng.uniform() < spec.missing_prob)
        cv.keypoints.present[rng.uniform_int(0, kNumLandmarks - 1)] = false;
      cohort.vertebrae.push_back(std::move(cv));
    }
  }
  return cohort;
}

namespace {

struct LocalFrame {
  Point origin;
  Point scale;
};

LocalFrame frame_of(const VertebraKeypoints& kp) {
  constexpr double kMinExtent = 1e-6;
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  bool first = true;
  for (int l = 0; l < kNumLandmarks; ++l) {
    if (!kp.present[l]) continue;
    const Point& p = kp.pts[l];
    if (first) {
      xmin = xmax = p.x;
      ymin = ymax = p.y;
      first = false;
    } else {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  LocalFrame f;
  f.origin = {xmin, ymin};
  f.scale = {std::max(xmax - xmin, kMinExtent), std::max(ymax - ymin, kMinExtent)};
  return f;
}

Point normalize_pt(const Point& p, const LocalFrame& f) {
  return {(p.x - f.origin.x) / f.scale.x, (p.y - f.origin.y) / f.scale.y};
}

Point denormalize_pt(const Point& p, const LocalFrame& f) {
  return {f.origin.x + p.x * f.scale.x, f.origin.y + p.y * f.scale.y};
}

}  // namespace

Cohort impute_knn(const Cohort& cohort, int k) {
  if (k < 1) throw InputError("k must be at least 1");
  Cohort out = cohort;

  // Index same-level vertebrae.
  std::vector<std::vector<std::size_t>> by_level(kVertebraLevels.size());
  auto level_index = [&](const std::string& level) {
    for (std::size_t i = 0; i < kVertebraLevels.size(); ++i)
      if (level == kVertebraLevels[i]) return static_cast<int>(i);
    return -1;
  };
  std::vector<int> level_of(cohort.vertebrae.size(), -1);
  for (std::size_t i = 0; i < cohort.vertebrae.size(); ++i) {
    level_of[i] = level_index(cohort.vertebrae[i].level);
    if (level_of[i] >= 0) by_level[level_of[i]].push_back(i);
  }

  for (std::size_t vi = 0; vi < cohort.vertebrae.size(); ++vi) {
    const CohortVertebra& v = cohort.vertebrae[vi];
    if (v.keypoints.all_present()) continue;
    if (level_of[vi] < 0)
      throw InsufficientNeighbors("unknown level '" + v.level + "' cannot be imputed");

    int present_count = 0;
    for (bool p : v.keypoints.present) present_count += p;
    if (present_count < 2)
      throw InsufficientNeighbors(v.patient_id + "/" + v.level +
                                  ": too few present keypoints for a local frame");
    const LocalFrame vframe = frame_of(v.keypoints);

    for (int l = 0; l < kNumLandmarks; ++l) {
      if (v.keypoints.present[l]) continue;

      // Candidates: same-level vertebrae of other patients possessing this
      // landmark and at least one mutually present one.
      std::vector<std::pair<double, std::size_t>> candidates;
      for (std::size_t ci : by_level[level_of[vi]]) {
        if (ci == vi) continue;
        const CohortVertebra& c = cohort.vertebrae[ci];
        if (c.patient_id == v.patient_id) continue;
        if (!c.keypoints.present[l]) continue;
        const LocalFrame cframe = frame_of(c.keypoints);
        double d2 = 0.0;
        int common = 0;
        for (int j = 0; j < kNumLandmarks; ++j) {
          if (!v.keypoints.present[j] || !c.keypoints.present[j]) continue;
          const Point a = normalize_pt(v.keypoints.pts[j], vframe);
          const Point b = normalize_pt(c.keypoints.pts[j], cframe);
          d2 += (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
          ++common;
        }
        if (common == 0) continue;
        candidates.emplace_back(std::sqrt(d2), ci);
      }
      if (static_cast<int>(candidates.size()) < k)
        throw InsufficientNeighbors(v.patient_id + "/" + v.level + " " +
                                    kLandmarkNames[l] + ": only " +
                                    std::to_string(candidates.size()) + " neighbors, need " +
                                    std::to_string(k));
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });

      Point mean{0.0, 0.0};
      for (int i = 0; i < k; ++i) {
        const CohortVertebra& c = cohort.vertebrae[candidates[i].second];
        const Point nb = normalize_pt(c.keypoints.pts[l], frame_of(c.keypoints));
        mean.x += nb.x;
        mean.y += nb.y;
      }
      mean.x /= k;
      mean.y /= k;

      out.vertebrae[vi].keypoints.pts[l] = denormalize_pt(mean, vframe);
      out.vertebrae[vi].keypoints.present[l] = true;
      out.vertebrae[vi].imputed[l] = true;
    }
  }
  return out;
}

}  // namespace vfa
