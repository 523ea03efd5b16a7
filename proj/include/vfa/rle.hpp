#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vfa/geometry.hpp"
#include "vfa/gsq.hpp"

namespace vfa {

enum class BaseDensity { gaussian, laplace };

const char* to_string(BaseDensity b);
BaseDensity base_density_from_string(const std::string& s);  // throws ParseError

// One affine coupling layer. A two-layer perceptron (tanh hidden units)
// reads the pass-through coordinate and emits a log-scale and shift for the
// other one. Layers alternate the transformed coordinate.
struct Coupling {
  int target = 0;                // coordinate transformed by this layer
  std::vector<double> w1, b1;    // hidden x 1 weights, hidden biases
  std::vector<double> w2s, w2t;  // output rows: log-scale, shift
  double b2s = 0.0, b2t = 0.0;

  int hidden() const { return static_cast<int>(w1.size()); }
};

struct FlowParams {
  std::vector<Coupling> layers;

  // All-zero perceptrons: the flow is exactly the identity map.
  static FlowParams identity(int n_layers = 4, int hidden = 16);

  std::size_t parameter_count() const;

  // Flat layout, per layer: w1[0..H-1], b1[0..H-1], w2s[0..H-1], b2s,
  // w2t[0..H-1], b2t. Gradient vectors and the model file share this order.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
};

// Keypoint density of Eq.-style residual log-likelihood: a base density q
// (Gaussian or Laplace, unit scale, per coordinate) reshaped by the flow,
// then shifted by mu and scaled by b per coordinate.
struct RleModel {
  Point mu{0.0, 0.0};
  Point b{1.0, 1.0};
  BaseDensity base = BaseDensity::gaussian;
  FlowParams flow = FlowParams::identity();

  void validate() const;  // b strictly positive, finite parameters
};

// log p_phi(xbar) by change of variables through the inverse couplings.
// Throws NonFiniteDensity when any layer produces a non-finite value.
double flow_log_density(const RleModel& m, const Point& xbar);

// flow_log_density((x - mu)/b) - log b_x - log b_y, computed literally as
// that composition.
double keypoint_log_likelihood(const RleModel& m, const Point& x);

// Sampling direction of the flow (base draw -> residual).
Point flow_forward(const RleModel& m, const Point& z);

// Draws x = b * flow(z) + mu with z from the base density; deterministic
// under the seed.
std::vector<Point> sample_keypoints(const RleModel& m, int n, std::uint64_t seed);

struct RleBatchItem {
  Point x;
  Point mu;
  Point b;
};

struct RleGradients {
  std::vector<double> flow;  // layout of FlowParams::flatten()
  std::vector<Point> mu;     // per batch item
  std::vector<Point> b;
};

// Sum over the batch of -log p_phi((x - mu)/b) + log b_x + log b_y, with
// reverse-mode gradients with respect to the flow parameters (summed) and
// each item's mu and b.
double rle_loss(const RleModel& m, const std::vector<RleBatchItem>& batch,
                RleGradients* gradients = nullptr);

struct FitConfig {
  double step = 1e-2;
  int epochs = 200;
  int batch_size = 256;
  int warmup_epochs = 10;  // step ramps linearly, then stays fixed
  double clip_norm = 10.0;
  int layers = 4;
  int hidden = 16;
  BaseDensity base = BaseDensity::gaussian;
  double init_scale = 0.1;  // hidden layer init; output rows start at zero
  std::uint64_t seed = 0;
};

struct FitTrace {
  double initial_nll = 0.0;
  std::vector<double> epoch_nll;  // mean NLL over the full data after each epoch
};

// Mini-batch gradient descent on the mean NLL of the normalized residuals
// (x - mu)/b. Requires at least 100 samples. Returns the best iterate, so
// the returned model's NLL never exceeds the initial one. Throws Diverged
// if the loss becomes non-finite.
RleModel fit_flow(const std::vector<RleBatchItem>& data, const FitConfig& cfg,
                  FitTrace* trace = nullptr);

// Per-coordinate interval [mu - lower, mu + upper] holding mass alpha of
// the marginal, from sorted Monte-Carlo draws (empirical alpha/2 and
// 1 - alpha/2 quantiles).
struct QuantileInterval {
  double alpha = 0.9;
  Point lower;  // half-width below mu, per coordinate
  Point upper;  // half-width above mu, per coordinate
};

QuantileInterval quantile_interval(const RleModel& m, double alpha, int n_draws = 100000,
                                   std::uint64_t seed = 0x9e3779b9u);

// Monte-Carlo propagation of the six keypoint densities through the fuzzy
// classifier: per-class mean/std and empirical (alpha/2, 1-alpha/2)
// interval, plus crisp per-draw votes.
struct UncertaintyReport {
  int draws = 0;
  std::array<double, kNumGrades> grade_mean{}, grade_std{}, grade_lo{}, grade_hi{};
  std::array<double, kNumMorphologies> morph_mean{}, morph_std{}, morph_lo{}, morph_hi{};
  std::array<double, kNumGrades> grade_votes{};
  std::array<double, kNumMorphologies> morph_votes{};
  Grade majority_grade = Grade::normal;
  Morphology majority_morphology = Morphology::normal;
  double grade_vote_fraction = 0.0;
  double morph_vote_fraction = 0.0;
};

UncertaintyReport propagate_uncertainty(const std::array<RleModel, kNumLandmarks>& models,
                                        const GsqThresholds& th, int n = 1000,
                                        std::uint64_t seed = 0, double alpha = 0.95);

// Text model format: versioned header, then one parameter per line, each
// tagged with its layer and role.
std::string rle_model_to_text(const RleModel& m);
RleModel rle_model_from_text(const std::string& text);  // throws ModelParse
void save_rle_model(const RleModel& m, const std::string& path);
RleModel load_rle_model(const std::string& path);

}  // namespace vfa
