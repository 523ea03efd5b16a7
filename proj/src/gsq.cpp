#include "vfa/gsq.hpp"

#include <algorithm>
#include <cmath>

#include "vfa/tape.hpp"
#include "vfa/textio.hpp"

namespace vfa {

const char* to_string(Grade g) {
  switch (g) {
    case Grade::normal: return "normal";
    case Grade::mild: return "mild";
    case Grade::moderate: return "moderate";
    case Grade::severe: return "severe";
  }
  return "?";
}

const char* to_string(Morphology m) {
  switch (m) {
    case Morphology::normal: return "normal";
    case Morphology::wedge: return "wedge";
    case Morphology::crush: return "crush";
    case Morphology::concave: return "concave";
  }
  return "?";
}

Grade grade_from_string(const std::string& s) {
  for (int i = 0; i < kNumGrades; ++i)
    if (s == to_string(static_cast<Grade>(i))) return static_cast<Grade>(i);
  throw ParseError("unknown grade: '" + s + "'");
}

Morphology morphology_from_string(const std::string& s) {
  for (int i = 0; i < kNumMorphologies; ++i)
    if (s == to_string(static_cast<Morphology>(i))) return static_cast<Morphology>(i);
  throw ParseError("unknown morphology: '" + s + "'");
}

void GsqThresholds::validate() const {
  if (!(0.0 < tol_normal && tol_normal < tol_mild && tol_mild < tol_moderate &&
        tol_moderate < 1.0))
    throw InputError("grade thresholds must satisfy 0 < normal < mild < moderate < 1");
  if (!(tau > 0.0)) throw InputError("sigmoid temperature must be positive");
}

namespace {

template <class A>
int argmax4(const A& a) {
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (a[i] > a[best]) best = i;
  return best;
}

}  // namespace

Grade ClassPosterior::grade_argmax() const { return static_cast<Grade>(argmax4(grade)); }

Morphology ClassPosterior::morphology_argmax() const {
  return static_cast<Morphology>(argmax4(morphology));
}

void ClassPosterior::validate() const {
  double gs = 0.0, ms = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!(grade[i] >= 0.0 && grade[i] <= 1.0) ||
        !(morphology[i] >= 0.0 && morphology[i] <= 1.0))
      throw NumericError("class probability outside [0,1]");
    gs += grade[i];
    ms += morphology[i];
  }
  if (std::abs(gs - 1.0) > 1e-9 || std::abs(ms - 1.0) > 1e-9)
    throw NumericError("class probabilities do not sum to 1");
}

ClassPosterior crisp_posterior(Grade g, Morphology m) {
  ClassPosterior p;
  p.grade = {0.0, 0.0, 0.0, 0.0};
  p.morphology = {0.0, 0.0, 0.0, 0.0};
  p.grade[static_cast<int>(g)] = 1.0;
  p.morphology[static_cast<int>(m)] = 1.0;
  p.provenance = Provenance::crisp;
  return p;
}

double severity_score(const RatioProfile& r, const GsqThresholds& th) {
  double s = std::max({1.0 - r.mpr, 1.0 - r.mar, std::abs(r.mpr - r.mar), 0.0});
  if (th.convex_graded) s = std::max({s, r.mpr - 1.0, r.mar - 1.0});
  return s;
}

Grade grade_from_severity(double s, const GsqThresholds& th) {
  if (s < th.tol_normal) return Grade::normal;
  if (s < th.tol_mild) return Grade::mild;
  if (s < th.tol_moderate) return Grade::moderate;
  return Grade::severe;
}

Grade crisp_grade(const RatioProfile& r, const GsqThresholds& th) {
  return grade_from_severity(severity_score(r, th), th);
}

Morphology crisp_morphology(const RatioProfile& r, const GsqThresholds& th) {
  const double s = severity_score(r, th);
  if (s < th.tol_normal) return Morphology::normal;
  if (r.mpr >= 1.0 && r.mar >= 1.0) return Morphology::normal;  // convex rule
  if (r.mpr < 1.0 && r.mar > 1.0) return Morphology::wedge;
  if (r.mpr > 1.0 && r.mar < 1.0) return Morphology::crush;
  if (r.mpr < 1.0 && r.mar < 1.0) return Morphology::concave;
  // One ratio exactly 1: concave if the other is below 1, else normal.
  return (r.mpr < 1.0 || r.mar < 1.0) ? Morphology::concave : Morphology::normal;
}

namespace {

// The fuzzy pipeline is written once over a generic scalar so the plain
// double evaluation and the taped gradient evaluation share the exact same
// expression tree.

template <class T>
T soft_severity_impl(const T& mpr, const T& mar, const GsqThresholds& th) {
  std::vector<T> args;
  args.reserve(7);
  args.push_back(1.0 - mpr);
  args.push_back(1.0 - mar);
  args.push_back(mpr - mar);
  args.push_back(mar - mpr);
  args.push_back(ad::make_like(mpr, 0.0));
  if (th.convex_graded) {
    args.push_back(mpr - 1.0);
    args.push_back(mar - 1.0);
  }
  return ad::lse(args, th.tau);
}

template <class T>
std::array<T, 4> grade_memberships_impl(const T& s, const GsqThresholds& th) {
  const double tau = th.tau;
  T normal = ad::sigmoid((th.tol_normal - s) / tau);
  T mild = ad::vmin(ad::sigmoid((s - th.tol_normal) / tau),
                    ad::sigmoid((th.tol_mild - s) / tau));
  T moderate = ad::vmin(ad::sigmoid((s - th.tol_mild) / tau),
                        ad::sigmoid((th.tol_moderate - s) / tau));
  T severe = ad::sigmoid((s - th.tol_moderate) / tau);
  return {normal, mild, moderate, severe};
}

template <class T>
std::array<T, 4> morphology_memberships_impl(const T& mpr, const T& mar, const T& s,
                                             const GsqThresholds& th) {
  const double tau = th.tau;
  T intact = ad::sigmoid((th.tol_normal - s) / tau);
  T deformed = ad::sigmoid((s - th.tol_normal) / tau);
  T mpr_low = ad::sigmoid((1.0 - mpr) / tau);
  T mpr_high = ad::sigmoid((mpr - 1.0) / tau);
  T mar_low = ad::sigmoid((1.0 - mar) / tau);
  T mar_high = ad::sigmoid((mar - 1.0) / tau);
  T normal = ad::vmax(intact, ad::vmin(mpr_high, mar_high));
  T wedge = ad::vmin(deformed, ad::vmin(mpr_low, mar_high));
  T crush = ad::vmin(deformed, ad::vmin(mpr_high, mar_low));
  T concave = ad::vmin(deformed, ad::vmin(mpr_low, mar_low));
  return {normal, wedge, crush, concave};
}

template <class T>
std::array<T, 4> normalize_group(const std::array<T, 4>& raw) {
  T denom = raw[0] + raw[1] + raw[2] + raw[3] + 1e-12;
  return {raw[0] / denom, raw[1] / denom, raw[2] / denom, raw[3] / denom};
}

template <class T>
struct FuzzyCore {
  T soft_s;
  std::array<T, 4> grade_raw, morph_raw;
  std::array<T, 4> grade, morph;
};

template <class T>
FuzzyCore<T> fuzzy_core(const T& mpr, const T& mar, const GsqThresholds& th) {
  FuzzyCore<T> out{soft_severity_impl(mpr, mar, th), {}, {}, {}, {}};
  out.grade_raw = grade_memberships_impl(out.soft_s, th);
  out.morph_raw = morphology_memberships_impl(mpr, mar, out.soft_s, th);
  out.grade = normalize_group(out.grade_raw);
  out.morph = normalize_group(out.morph_raw);
  return out;
}

template <class T>
FuzzyCore<T> fuzzy_core_from_coords(const std::array<T, 12>& c, const GsqThresholds& th) {
  T h_p = detail::pair_height(c[0], c[1], c[6], c[7]);
  T h_m = detail::pair_height(c[2], c[3], c[8], c[9]);
  T h_a = detail::pair_height(c[4], c[5], c[10], c[11]);
  T mpr = h_m / h_p;
  T mar = h_m / h_a;
  return fuzzy_core(mpr, mar, th);
}

}  // namespace

FuzzyDetail fuzzy_detail(const RatioProfile& r, const GsqThresholds& th) {
  th.validate();
  FuzzyCore<double> core = fuzzy_core(r.mpr, r.mar, th);
  FuzzyDetail out;
  out.soft_severity = core.soft_s;
  out.grade_raw = core.grade_raw;
  out.morphology_raw = core.morph_raw;
  out.posterior.grade = core.grade;
  out.posterior.morphology = core.morph;
  out.posterior.provenance = Provenance::fuzzy;
  return out;
}

ClassPosterior fuzzy_memberships(const RatioProfile& r, const GsqThresholds& th) {
  return fuzzy_detail(r, th).posterior;
}

std::array<double, kNumGrades> grade_memberships_from_severity(double s,
                                                               const GsqThresholds& th) {
  return grade_memberships_impl(s, th);
}

FuzzyGradientResult fuzzy_with_gradient(const VertebraKeypoints& kp,
                                        const GsqThresholds& th) {
  th.validate();
  for (int i = 0; i < kNumLandmarks; ++i) {
    if (!kp.present[i])
      throw MissingKeypoint(std::string("missing keypoint ") + kLandmarkNames[i]);
    if (!std::isfinite(kp.pts[i].x) || !std::isfinite(kp.pts[i].y))
      throw MissingKeypoint(std::string("non-finite keypoint ") + kLandmarkNames[i]);
  }

  ad::Tape tape;
  const std::array<double, 12> coords = kp.flat();
  std::array<ad::Var, 12> leaves;
  for (int i = 0; i < 12; ++i) leaves[i] = tape.leaf(coords[i]);

  FuzzyCore<ad::Var> core = fuzzy_core_from_coords(leaves, th);

  FuzzyGradientResult out;
  out.posterior.provenance = Provenance::fuzzy;
  for (int c = 0; c < 4; ++c) {
    out.posterior.grade[c] = core.grade[c].value();
    out.posterior.morphology[c] = core.morph[c].value();
  }
  out.gradients.tape_nodes = tape.size();
  for (int c = 0; c < 4; ++c) {
    const std::vector<double> adj = tape.gradient(core.grade[c]);
    for (int i = 0; i < 12; ++i) out.gradients.grade[c][i] = adj[leaves[i].index()];
  }
  for (int c = 0; c < 4; ++c) {
    const std::vector<double> adj = tape.gradient(core.morph[c]);
    for (int i = 0; i < 12; ++i) out.gradients.morphology[c][i] = adj[leaves[i].index()];
  }
  return out;
}

std::vector<double> combine(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ClassMismatch("posterior class counts differ");
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] * q[i];
    sum += out[i];
  }
  if (!(sum > 0.0)) throw NumericError("product posterior vanishes everywhere");
  for (double& v : out) v /= sum;
  return out;
}

ClassPosterior combine_posterior(const ClassPosterior& p_kps, const ClassPosterior& p_img) {
  ClassPosterior out = p_kps;
  std::vector<double> g = combine({p_kps.grade.begin(), p_kps.grade.end()},
                                  {p_img.grade.begin(), p_img.grade.end()});
  std::vector<double> m = combine({p_kps.morphology.begin(), p_kps.morphology.end()},
                                  {p_img.morphology.begin(), p_img.morphology.end()});
  std::copy(g.begin(), g.end(), out.grade.begin());
  std::copy(m.begin(), m.end(), out.morphology.begin());
  return out;
}

double weighted_ce_loss(const std::vector<CeItem>& batch,
                        const std::vector<double>& class_weights, double lambda_kps,
                        double lambda_img, CeGradients* gradients) {
  if (batch.empty()) throw EmptyBatch("weighted_ce_loss: empty batch");
  constexpr double kProbFloor = 1e-12;
  if (gradients) {
    gradients->d_p_kps.assign(batch.size(), {});
    gradients->d_p_img.assign(batch.size(), {});
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const CeItem& item = batch[i];
    const int c = item.true_class;
    if (c < 0 || c >= static_cast<int>(item.p_kps.size()) ||
        c >= static_cast<int>(class_weights.size()))
      throw ClassMismatch("true class outside posterior/weight range");
    const double w = class_weights[c];
    if (gradients) {
      gradients->d_p_kps[i].assign(item.p_kps.size(), 0.0);
      gradients->d_p_img[i].assign(item.p_img.size(), 0.0);
    }
    if (lambda_kps != 0.0) {
      const double p = std::max(item.p_kps[c], kProbFloor);
      loss -= w * lambda_kps * std::log(p);
      if (gradients) gradients->d_p_kps[i][c] = -w * lambda_kps / p;
    }
    if (lambda_img != 0.0 && !item.p_img.empty()) {
      if (c >= static_cast<int>(item.p_img.size()))
        throw ClassMismatch("true class outside image posterior range");
      const double p = std::max(item.p_img[c], kProbFloor);
      loss -= w * lambda_img * std::log(p);
      if (gradients) gradients->d_p_img[i][c] = -w * lambda_img / p;
    }
  }
  return loss;
}

std::vector<double> inverse_frequency_weights(const std::vector<int>& class_counts) {
  std::vector<double> w(class_counts.size(), 0.0);
  double sum = 0.0;
  int nonzero = 0;
  for (std::size_t i = 0; i < class_counts.size(); ++i) {
    if (class_counts[i] > 0) {
      w[i] = 1.0 / class_counts[i];
      sum += w[i];
      ++nonzero;
    }
  }
  if (nonzero == 0) throw EmptyBatch("no class counts");
  const double scale = nonzero / sum;
  for (double& v : w) v *= scale;
  return w;
}

}  // namespace vfa
