#include "vfa/rle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vfa/rng.hpp"
#include "vfa/tape.hpp"
#include "vfa/textio.hpp"

namespace vfa {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr double kLog4 = 1.3862943611198906188;    // log 4, Laplace product norm

constexpr int kParamsPerLayer(int hidden) { return 4 * hidden + 2; }

// Flat per-layer offsets: w1, b1, w2s, b2s, w2t, b2t.
template <class T>
void mlp_eval(const T* p, int hidden, const T& cond, T& log_scale, T& shift) {
  T ls = p[3 * hidden];
  T sh = p[4 * hidden + 1];
  for (int j = 0; j < hidden; ++j) {
    T h = ad::tanh(p[j] * cond + p[hidden + j]);
    ls = ls + p[2 * hidden + j] * h;
    sh = sh + p[3 * hidden + 1 + j] * h;
  }
  log_scale = ls;
  shift = sh;
}

// Inverse pass through the couplings plus the base log-density; the log
// Jacobian of the inverse is the negated sum of the forward log-scales.
template <class T>
T flow_log_density_impl(const T* params, int n_layers, int hidden,
                        const std::vector<int>& targets, BaseDensity base, T x0, T x1) {
  T logdet = ad::make_like(x0, 0.0);
  for (int k = n_layers - 1; k >= 0; --k) {
    const T* p = params + static_cast<std::size_t>(k) * kParamsPerLayer(hidden);
    T log_scale, shift;
    if (targets[k] == 0) {
      mlp_eval(p, hidden, x1, log_scale, shift);
      x0 = (x0 - shift) * ad::exp(-log_scale);
    } else {
      mlp_eval(p, hidden, x0, log_scale, shift);
      x1 = (x1 - shift) * ad::exp(-log_scale);
    }
    logdet = logdet - log_scale;
  }
  T logq = base == BaseDensity::gaussian
               ? -kLog2Pi - (x0 * x0 + x1 * x1) * 0.5
               : -kLog4 - ad::vabs(x0) - ad::vabs(x1);
  return logq + logdet;
}

struct FlatFlow {
  std::vector<double> params;
  std::vector<int> targets;
  int hidden = 0;
  int n_layers = 0;
};

FlatFlow flatten_flow(const FlowParams& flow) {
  FlatFlow f;
  f.params = flow.flatten();
  f.n_layers = static_cast<int>(flow.layers.size());
  f.hidden = f.n_layers ? flow.layers[0].hidden() : 0;
  for (const Coupling& c : flow.layers) f.targets.push_back(c.target);
  return f;
}

double check_finite_density(double v) {
  if (!std::isfinite(v)) throw NonFiniteDensity("flow produced a non-finite log-density");
  return v;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  // Linear interpolation between order statistics (type 7).
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

const char* to_string(BaseDensity b) {
  return b == BaseDensity::gaussian ? "gaussian" : "laplace";
}

BaseDensity base_density_from_string(const std::string& s) {
  if (s == "gaussian") return BaseDensity::gaussian;
  if (s == "laplace") return BaseDensity::laplace;
  throw ParseError("unknown base density: '" + s + "'");
}

FlowParams FlowParams::identity(int n_layers, int hidden) {
  FlowParams f;
  f.layers.resize(n_layers);
  for (int k = 0; k < n_layers; ++k) {
    Coupling& c = f.layers[k];
    c.target = k % 2;
    c.w1.assign(hidden, 0.0);
    c.b1.assign(hidden, 0.0);
    c.w2s.assign(hidden, 0.0);
    c.w2t.assign(hidden, 0.0);
    c.b2s = 0.0;
    c.b2t = 0.0;
  }
  return f;
}

std::size_t FlowParams::parameter_count() const {
  std::size_t n = 0;
  for (const Coupling& c : layers) n += kParamsPerLayer(c.hidden());
  return n;
}

std::vector<double> FlowParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Coupling& c : layers) {
    out.insert(out.end(), c.w1.begin(), c.w1.end());
    out.insert(out.end(), c.b1.begin(), c.b1.end());
    out.insert(out.end(), c.w2s.begin(), c.w2s.end());
    out.push_back(c.b2s);
    out.insert(out.end(), c.w2t.begin(), c.w2t.end());
    out.push_back(c.b2t);
  }
  return out;
}

void FlowParams::unflatten(const std::vector<double>& flat) {
  std::size_t i = 0;
  for (Coupling& c : layers) {
    const int h = c.hidden();
    for (int j = 0; j < h; ++j) c.w1[j] = flat[i++];
    for (int j = 0; j < h; ++j) c.b1[j] = flat[i++];
    for (int j = 0; j < h; ++j) c.w2s[j] = flat[i++];
    c.b2s = flat[i++];
    for (int j = 0; j < h; ++j) c.w2t[j] = flat[i++];
    c.b2t = flat[i++];
  }
}

void RleModel::validate() const {
  if (!(b.x > 0.0) || !(b.y > 0.0)) throw InputError("scale b must be strictly positive");
  if (!std::isfinite(mu.x) || !std::isfinite(mu.y) || !std::isfinite(b.x) ||
      !std::isfinite(b.y))
    throw InputError("non-finite mu or b");
  for (const Coupling& c : flow.layers) {
    if (c.target != 0 && c.target != 1) throw InputError("coupling target must be 0 or 1");
    if (c.w2s.size() != c.w1.size() || c.w2t.size() != c.w1.size() ||
        c.b1.size() != c.w1.size())
      throw InputError("coupling parameter shapes disagree");
  }
}

double flow_log_density(const RleModel& m, const Point& xbar) {
  // Direct double-path inverse pass; accumulation order matches mlp_eval so
  // values agree bit for bit with the taped evaluation.
  double x0 = xbar.x, x1 = xbar.y;
  double logdet = 0.0;
  for (auto it = m.flow.layers.rbegin(); it != m.flow.layers.rend(); ++it) {
    const Coupling& c = *it;
    const double cond = c.target == 0 ? x1 : x0;
    double ls = c.b2s, sh = c.b2t;
    for (int j = 0; j < c.hidden(); ++j) {
      const double h = std::tanh(c.w1[j] * cond + c.b1[j]);
      ls = ls + c.w2s[j] * h;
      sh = sh + c.w2t[j] * h;
    }
    if (c.target == 0)
      x0 = (x0 - sh) * std::exp(-ls);
    else
      x1 = (x1 - sh) * std::exp(-ls);
    logdet = logdet - ls;
  }
  const double logq = m.base == BaseDensity::gaussian
                          ? -kLog2Pi - (x0 * x0 + x1 * x1) * 0.5
                          : -kLog4 - std::abs(x0) - std::abs(x1);
  return check_finite_density(logq + logdet);
}

double keypoint_log_likelihood(const RleModel& m, const Point& x) {
  return flow_log_density(m, Point{(x.x - m.mu.x) / m.b.x, (x.y - m.mu.y) / m.b.y}) -
         std::log(m.b.x) - std::log(m.b.y);
}

Point flow_forward(const RleModel& m, const Point& z) {
  double c0 = z.x, c1 = z.y;
  for (const Coupling& c : m.flow.layers) {
    const int h = c.hidden();
    const double cond = c.target == 0 ? c1 : c0;
    double ls = c.b2s, sh = c.b2t;
    for (int j = 0; j < h; ++j) {
      const double hid = std::tanh(c.w1[j] * cond + c.b1[j]);
      ls += c.w2s[j] * hid;
      sh += c.w2t[j] * hid;
    }
    if (c.target == 0)
      c0 = c0 * std::exp(ls) + sh;
    else
      c1 = c1 * std::exp(ls) + sh;
  }
  return {c0, c1};
}

std::vector<Point> sample_keypoints(const RleModel& m, int n, std::uint64_t seed) {
  m.validate();
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Point z = m.base == BaseDensity::gaussian ? rng.normal2()
                                              : Point{rng.laplace(), rng.laplace()};
    Point r = flow_forward(m, z);
    out.push_back({m.b.x * r.x + m.mu.x, m.b.y * r.y + m.mu.y});
  }
  return out;
}

double rle_loss(const RleModel& m, const std::vector<RleBatchItem>& batch,
                RleGradients* gradients) {
  if (batch.empty()) throw EmptyBatch("rle_loss: empty batch");
  m.validate();

  const FlatFlow flat = flatten_flow(m.flow);
  const std::size_t n_params = flat.params.size();
  if (gradients) {
    gradients->flow.assign(n_params, 0.0);
    gradients->mu.assign(batch.size(), Point{});
    gradients->b.assign(batch.size(), Point{});
  }

  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RleBatchItem& item = batch[i];
    if (!(item.b.x > 0.0) || !(item.b.y > 0.0))
      throw InputError("rle_loss: item scale b must be strictly positive");

    ad::Tape tape;
    std::vector<ad::Var> params(n_params);
    for (std::size_t j = 0; j < n_params; ++j) params[j] = tape.leaf(flat.params[j]);
    ad::Var mu0 = tape.leaf(item.mu.x), mu1 = tape.leaf(item.mu.y);
    ad::Var b0 = tape.leaf(item.b.x), b1 = tape.leaf(item.b.y);

    ad::Var xb0 = (item.x.x - mu0) / b0;
    ad::Var xb1 = (item.x.y - mu1) / b1;
    ad::Var logp = flow_log_density_impl<ad::Var>(params.data(), flat.n_layers, flat.hidden,
                                                  flat.targets, m.base, xb0, xb1);
    ad::Var loss_i = ad::log(b0) + ad::log(b1) - logp;
    check_finite_density(loss_i.value());
    total += loss_i.value();

    if (gradients) {
      const std::vector<double> adj = tape.gradient(loss_i);
      for (std::size_t j = 0; j < n_params; ++j) gradients->flow[j] += adj[params[j].index()];
      gradients->mu[i] = {adj[mu0.index()], adj[mu1.index()]};
      gradients->b[i] = {adj[b0.index()], adj[b1.index()]};
    }
  }
  return total;
}

namespace {

// Mean NLL of pre-normalized residuals over [begin, end); one tape per call,
// parameters entered once as leaves, a single backward sweep.
double flow_range_nll(const std::vector<double>& flat_params, int n_layers, int hidden,
                      const std::vector<int>& targets, BaseDensity base,
                      const std::vector<Point>& xbar, const std::vector<int>& order,
                      std::size_t begin, std::size_t end, std::vector<double>* grad) {
  if (!grad) {
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const Point& p = xbar[order[i]];
      sum -= flow_log_density_impl<double>(flat_params.data(), n_layers, hidden, targets,
                                           base, p.x, p.y);
    }
    return check_finite_density(sum / static_cast<double>(end - begin));
  }

  ad::Tape tape;
  std::vector<ad::Var> params(flat_params.size());
  for (std::size_t j = 0; j < flat_params.size(); ++j) params[j] = tape.leaf(flat_params[j]);
  ad::Var total = tape.leaf(0.0);
  for (std::size_t i = begin; i < end; ++i) {
    const Point& p = xbar[order[i]];
    ad::Var x0 = tape.leaf(p.x), x1 = tape.leaf(p.y);
    total = total - flow_log_density_impl<ad::Var>(params.data(), n_layers, hidden, targets,
                                                   base, x0, x1);
  }
  ad::Var mean = total / static_cast<double>(end - begin);
  check_finite_density(mean.value());
  const std::vector<double> adj = tape.gradient(mean);
  grad->assign(flat_params.size(), 0.0);
  for (std::size_t j = 0; j < flat_params.size(); ++j) (*grad)[j] = adj[params[j].index()];
  return mean.value();
}

}  // namespace

RleModel fit_flow(const std::vector<RleBatchItem>& data, const FitConfig& cfg,
                  FitTrace* trace) {
  if (data.size() < 100)
    throw InsufficientData("fit_flow requires at least 100 samples, got " +
                           std::to_string(data.size()));

  std::vector<Point> xbar;
  xbar.reserve(data.size());
  for (const RleBatchItem& item : data) {
    if (!(item.b.x > 0.0) || !(item.b.y > 0.0))
      throw InputError("fit_flow: item scale b must be strictly positive");
    xbar.push_back({(item.x.x - item.mu.x) / item.b.x, (item.x.y - item.mu.y) / item.b.y});
  }

  RleModel model;
  model.base = cfg.base;
  model.flow = FlowParams::identity(cfg.layers, cfg.hidden);
  Rng rng(derive_seed(cfg.seed, 0xf17f10));
  for (Coupling& c : model.flow.layers) {
    for (int j = 0; j < c.hidden(); ++j) {
      c.w1[j] = cfg.init_scale * rng.normal();
      c.b1[j] = cfg.init_scale * rng.normal();
    }
    // w2s/w2t/b2 stay zero: training starts from the exact identity flow.
  }

  std::vector<double> params = model.flow.flatten();
  std::vector<int> targets;
  for (const Coupling& c : model.flow.layers) targets.push_back(c.target);
  const int hidden = cfg.hidden, n_layers = cfg.layers;

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  const double initial_nll = flow_range_nll(params, n_layers, hidden, targets, cfg.base,
                                            xbar, order, 0, xbar.size(), nullptr);
  if (trace) {
    trace->initial_nll = initial_nll;
    trace->epoch_nll.clear();
  }

  std::vector<double> best_params = params;
  double best_nll = initial_nll;
  std::vector<double> grad;
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5afF7e));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the seeded stream.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }
    const double step = cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs
                            ? cfg.step * (epoch + 1) / cfg.warmup_epochs
                            : cfg.step;
    const std::size_t bs =
        cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size) : xbar.size();
    for (std::size_t begin = 0; begin < xbar.size(); begin += bs) {
      const std::size_t end = std::min(begin + bs, xbar.size());
      flow_range_nll(params, n_layers, hidden, targets, cfg.base, xbar, order, begin, end,
                     &grad);
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      for (std::size_t j = 0; j < params.size(); ++j) params[j] -= step * scale * grad[j];
    }

    const double nll = flow_range_nll(params, n_layers, hidden, targets, cfg.base, xbar,
                                      order, 0, xbar.size(), nullptr);
    if (!std::isfinite(nll)) throw Diverged("fit_flow: non-finite loss");
    if (trace) trace->epoch_nll.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best_params = params;
    }
  }

  model.flow.unflatten(best_params);
  return model;
}

QuantileInterval quantile_interval(const RleModel& m, double alpha, int n_draws,
                                   std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  const std::vector<Point> draws = sample_keypoints(m, n_draws, seed);
  std::vector<double> xs(draws.size()), ys(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    xs[i] = draws[i].x;
    ys[i] = draws[i].y;
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double lo = (1.0 - alpha) / 2.0, hi = 1.0 - (1.0 - alpha) / 2.0;
  QuantileInterval q;
  q.alpha = alpha;
  q.lower = {m.mu.x - quantile_sorted(xs, lo), m.mu.y - quantile_sorted(ys, lo)};
  q.upper = {quantile_sorted(xs, hi) - m.mu.x, quantile_sorted(ys, hi) - m.mu.y};
  return q;
}

UncertaintyReport propagate_uncertainty(const std::array<RleModel, kNumLandmarks>& models,
                                        const GsqThresholds& th, int n, std::uint64_t seed,
                                        double alpha) {
  if (n < 1) throw InputError("propagate_uncertainty needs at least one draw");
  for (const RleModel& m : models) m.validate();
  th.validate();

  Rng rng(seed);
  std::vector<std::array<double, 4>> grade_probs, morph_probs;
  grade_probs.reserve(n);
  morph_probs.reserve(n);
  UncertaintyReport rep;
  rep.draws = n;

  for (int i = 0; i < n; ++i) {
    VertebraKeypoints kp;
    for (int l = 0; l < kNumLandmarks; ++l) {
      const RleModel& m = models[l];
      Point z = m.base == BaseDensity::gaussian ? rng.normal2()
                                                : Point{rng.laplace(), rng.laplace()};
      Point r = flow_forward(m, z);
      kp.pts[l] = {m.b.x * r.x + m.mu.x, m.b.y * r.y + m.mu.y};
    }
    const RatioProfile ratios = ratios_from_keypoints(kp);
    const ClassPosterior post = fuzzy_memberships(ratios, th);
    grade_probs.push_back(post.grade);
    morph_probs.push_back(post.morphology);
    rep.grade_votes[static_cast<int>(crisp_grade(ratios, th))] += 1.0;
    rep.morph_votes[static_cast<int>(crisp_morphology(ratios, th))] += 1.0;
  }

  const double lo_q = (1.0 - alpha) / 2.0, hi_q = 1.0 - (1.0 - alpha) / 2.0;
  std::vector<double> column(n);
  for (int c = 0; c < 4; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      const auto& probs = pass == 0 ? grade_probs : morph_probs;
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += probs[i][c];
      mean /= n;
      double var = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = probs[i][c] - mean;
        var += d * d;
      }
      var = n > 1 ? var / (n - 1) : 0.0;
      for (int i = 0; i < n; ++i) column[i] = probs[i][c];
      std::sort(column.begin(), column.end());
      const double qlo = quantile_sorted(column, lo_q);
      const double qhi = quantile_sorted(column, hi_q);
      if (pass == 0) {
        rep.grade_mean[c] = mean;
        rep.grade_std[c] = std::sqrt(var);
        rep.grade_lo[c] = qlo;
        rep.grade_hi[c] = qhi;
      } else {
        rep.morph_mean[c] = mean;
        rep.morph_std[c] = std::sqrt(var);
        rep.morph_lo[c] = qlo;
        rep.morph_hi[c] = qhi;
      }
    }
  }

  for (int c = 0; c < 4; ++c) {
    rep.grade_votes[c] /= n;
    rep.morph_votes[c] /= n;
  }
  int gbest = 0, mbest = 0;
  for (int c = 1; c < 4; ++c) {
    if (rep.grade_votes[c] > rep.grade_votes[gbest]) gbest = c;
    if (rep.morph_votes[c] > rep.morph_votes[mbest]) mbest = c;
  }
  rep.majority_grade = static_cast<Grade>(gbest);
  rep.majority_morphology = static_cast<Morphology>(mbest);
  rep.grade_vote_fraction = rep.grade_votes[gbest];
  rep.morph_vote_fraction = rep.morph_votes[mbest];
  return rep;
}

std::string rle_model_to_text(const RleModel& m) {
  std::ostringstream out;
  out << "vfa-rle v1\n";
  out << "base " << to_string(m.base) << "\n";
  out << "layers " << m.flow.layers.size() << "\n";
  out << "hidden " << (m.flow.layers.empty() ? 0 : m.flow.layers[0].hidden()) << "\n";
  out << "mu " << format_double(m.mu.x) << " " << format_double(m.mu.y) << "\n";
  out << "b " << format_double(m.b.x) << " " << format_double(m.b.y) << "\n";
  for (std::size_t k = 0; k < m.flow.layers.size(); ++k) {
    const Coupling& c = m.flow.layers[k];
    out << "layer " << k << " target " << c.target << "\n";
    for (int j = 0; j < c.hidden(); ++j)
      out << "layer " << k << " w1 " << j << " " << format_double(c.w1[j]) << "\n";
    for (int j = 0; j < c.hidden(); ++j)
      out << "layer " << k << " b1 " << j << " " << format_double(c.b1[j]) << "\n";
    for (int j = 0; j < c.hidden(); ++j)
      out << "layer " << k << " w2s " << j << " " << format_double(c.w2s[j]) << "\n";
    out << "layer " << k << " b2s " << format_double(c.b2s) << "\n";
    for (int j = 0; j < c.hidden(); ++j)
      out << "layer " << k << " w2t " << j << " " << format_double(c.w2t[j]) << "\n";
    out << "layer " << k << " b2t " << format_double(c.b2t) << "\n";
  }
  return out.str();
}

RleModel rle_model_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "vfa-rle v1")
    throw ModelParse("bad model header (expected 'vfa-rle v1')");

  RleModel m;
  m.flow.layers.clear();
  int n_layers = -1, hidden = -1;
  bool saw_base = false, saw_mu = false, saw_b = false;
  int lineno = 1;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "base") {
        std::string v;
        ls >> v;
        m.base = base_density_from_string(v);
        saw_base = true;
      } else if (tag == "layers") {
        ls >> n_layers;
      } else if (tag == "hidden") {
        ls >> hidden;
      } else if (tag == "mu") {
        ls >> m.mu.x >> m.mu.y;
        saw_mu = true;
      } else if (tag == "b") {
        ls >> m.b.x >> m.b.y;
        saw_b = true;
      } else if (tag == "layer") {
        if (n_layers < 0 || hidden < 0)
          throw ModelParse("layer line before layers/hidden declaration");
        if (m.flow.layers.empty()) m.flow = FlowParams::identity(n_layers, hidden);
        int k;
        std::string role;
        ls >> k >> role;
        if (k < 0 || k >= n_layers) throw ModelParse("layer index out of range");
        Coupling& c = m.flow.layers[k];
        if (role == "target") {
          ls >> c.target;
        } else if (role == "b2s") {
          ls >> c.b2s;
        } else if (role == "b2t") {
          ls >> c.b2t;
        } else {
          int j;
          double v;
          ls >> j >> v;
          if (j < 0 || j >= hidden) throw ModelParse("parameter index out of range");
          if (role == "w1")
            c.w1[j] = v;
          else if (role == "b1")
            c.b1[j] = v;
          else if (role == "w2s")
            c.w2s[j] = v;
          else if (role == "w2t")
            c.w2t[j] = v;
          else
            throw ModelParse("unknown parameter role '" + role + "'");
        }
      } else {
        throw ModelParse("unknown line tag '" + tag + "'");
      }
      if (ls.fail()) throw ModelParse("malformed line " + std::to_string(lineno));
    }
  } catch (const ParseError& e) {
    throw ModelParse(e.what());
  }
  if (!saw_base || !saw_mu || !saw_b || n_layers < 0 || hidden < 0)
    throw ModelParse("incomplete model file");
  if (m.flow.layers.empty()) m.flow = FlowParams::identity(n_layers, hidden);
  m.validate();
  return m;
}

void save_rle_model(const RleModel& m, const std::string& path) {
  write_file(path, rle_model_to_text(m));
}

RleModel load_rle_model(const std::string& path) {
  try {
    return rle_model_from_text(read_file(path));
  } catch (const ModelParse& e) {
    throw ModelParse(path + ": " + e.what());
  }
}

}  // namespace vfa
