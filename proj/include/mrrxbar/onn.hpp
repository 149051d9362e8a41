#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mrrxbar/channel_plan.hpp"
#include "mrrxbar/ring.hpp"
#include "mrrxbar/signed_mvm.hpp"

namespace mrrxbar {

struct MlpSpec {
  int inputs = 4;
  int hidden = 4;
  int outputs = 3;

  void validate() const {
    if (inputs < 1 || hidden < 1 || outputs < 1)
      throw ConfigError("mlp: layer sizes must be >= 1");
  }
};

struct MlpWeights {
  Mat w1;  // hidden x inputs
  Mat w2;  // outputs x hidden

  static MlpWeights random_init(const MlpSpec& spec, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    MlpWeights w;
    w.w1 = Mat::NullaryExpr(spec.hidden, spec.inputs, [&]() { return uni(rng); });
    w.w2 = Mat::NullaryExpr(spec.outputs, spec.hidden, [&]() { return uni(rng); });
    return w;
  }
};

enum class UpdateMode { weight_domain, phase_domain };

struct TrainConfig {
  double learning_rate = 0.05;
  int rounds = 500;
  unsigned seed = 42;
  UpdateMode update_mode = UpdateMode::weight_domain;
  // stop once the training-set correct rate reaches this (0 = run all rounds)
  double target_rate = 0.0;
  // clip radius for trained weights; 1 keeps them directly representable,
  // larger values emulate unconstrained digital training
  double weight_scale = 1.0;

  void validate() const {
    if (learning_rate <= 0) throw ConfigError("train: learning_rate must be > 0");
    if (rounds < 1) throw ConfigError("train: rounds must be >= 1");
    if (target_rate < 0 || target_rate > 1)
      throw ConfigError("train: target_rate must lie in [0,1]");
    if (weight_scale < 1)
      throw ConfigError("train: weight_scale must be >= 1");
    if (update_mode == UpdateMode::phase_domain && weight_scale != 1.0)
      throw ConfigError("train: phase_domain requires weight_scale = 1");
  }
};

inline Vec softmax(const Vec& z) {
  const Vec shifted = (z.array() - z.maxCoeff()).exp();
  return shifted / shifted.sum();
}

inline int argmax_index(const Vec& v) {
  int k = 0;
  v.maxCoeff(&k);
  return k;
}

inline Vec relu(const Vec& z) { return z.cwiseMax(0.0); }

// Plain digital reference of the 2-layer ReLU net (no device in the loop).
inline Vec mlp_forward_digital(const MlpSpec& spec, const MlpWeights& w,
                               const Vec& x, Vec* z1_out = nullptr,
                               Vec* h_out = nullptr) {
  if (x.size() != spec.inputs) throw DimensionMismatch("mlp: input length");
  const Vec z1 = w.w1 * x;
  const Vec h = relu(z1);
  if (z1_out) *z1_out = z1;
  if (h_out) *h_out = h;
  return w.w2 * h;
}

// Runs both layers through crossbar-style backends. Weights are rescaled
// per layer into [-1,1] before programming and hidden activations are
// divided by their reachable maximum, so every optical input stays in
// [0,1]; the scales are undone electronically. ReLU is positively
// homogeneous, so the composite logits equal the digital ones up to the
// backend's physical error.
class MlpEngine {
 public:
  MlpEngine(const MlpSpec& spec, Backend& b1, Backend& b2)
      : spec_(spec), b1_(b1), b2_(b2) {
    spec_.validate();
    n_ = b1.size();
    if (b2.size() != n_) throw DimensionMismatch("mlp: backends must match in size");
    if (n_ < spec.inputs || n_ < spec.hidden || n_ < spec.outputs)
      throw DimensionMismatch("mlp: crossbar smaller than the widest layer");
  }

  Vec forward(const MlpWeights& w, const Vec& x, const std::string& tag1,
              const std::string& tag2, Vec* z1_out = nullptr,
              Vec* h_out = nullptr) {
    const double s1 = layer_scale(w.w1);
    const double s2 = layer_scale(w.w2);
    const Vec z1 =
        s1 * mvm_signed_weights(b1_, embed(w.w1 / s1), embed_vec(x, spec_.inputs), tag1)
                 .head(spec_.hidden);
    const Vec h = relu(z1);
    const double h_full = spec_.inputs * s1;  // max reachable activation
    const Vec hs = (h / h_full).cwiseMin(1.0);
    const Vec z2 =
        s2 * h_full *
        mvm_signed_weights(b2_, embed(w.w2 / s2), embed_vec(hs, spec_.hidden), tag2)
            .head(spec_.outputs);
    if (z1_out) *z1_out = z1;
    if (h_out) *h_out = h;
    return z2;
  }

  // delta on the hidden layer: (W2^T d2) gated by the ReLU mask
  Vec hidden_delta(const MlpWeights& w, const Vec& d2, const Vec& z1,
                   const std::string& tag2) {
    const double s2 = layer_scale(w.w2);
    const Vec g = s2 * mvm_signed_backward(b2_, embed(w.w2 / s2),
                                           embed_vec(d2, spec_.outputs), tag2)
                           .head(spec_.hidden);
    return (z1.array() > 0).select(g, Vec::Zero(spec_.hidden));
  }

  static double layer_scale(const Mat& w) {
    return std::max(1.0, w.cwiseAbs().maxCoeff());
  }

 private:
  Mat embed(const Mat& w) const {
    Mat e = Mat::Zero(n_, n_);
    e.topLeftCorner(w.rows(), w.cols()) = w;
    return e;
  }
  Vec embed_vec(const Vec& v, int used) const {
    Vec e = Vec::Zero(n_);
    e.head(used) = v;
    return e;
  }

  MlpSpec spec_;
  Backend& b1_;
  Backend& b2_;
  int n_ = 0;
};

struct RoundStat {
  int round = 0;
  double mean_loss = 0.0;
  double correct_rate = 0.0;
};

struct TrainResult {
  MlpWeights weights;
  std::vector<RoundStat> curve;
  int rounds_run = 0;
  bool reached_target = false;
};

struct EvalResult {
  int correct = 0;
  std::vector<int> predicted;
  Eigen::MatrixXi confusion;  // rows: truth, cols: prediction
};

namespace detail {

// minimum slope magnitude (weight per radian) used in heater-domain updates
inline constexpr double kSlopeFloor = 1.0;

// Virtual heater-domain parameterization: a normalized weight follows the
// drop-peak-normalized transmission of a reference ring as its detune moves
// in [0, umax], and gradients chain through the transmission slope.
struct PhaseLaw {
  CouplerSet couplers;
  double t_peak = 1.0;
  double umax = 1.0;

  static PhaseLaw make(int n_cols) {
    PhaseLaw law;
    const RingGeometry geom = RingGeometry::make(62.8e-6, 4.2, 2.35, 1.55e-6);
    law.couplers = couplers_for_q(9000.0, geom, 1.0);
    law.t_peak = drop_transmission(law.couplers, 0.0);
    const MrrDevice dev = MrrDevice::make(geom, law.couplers);
    law.umax = plan_channels(std::max(n_cols, 1), dev, 8).weight_detune_max();
    return law;
  }

  double weight_at(double u) const {
    return 2.0 * drop_transmission(couplers, u) / t_peak - 1.0;
  }
  double dweight_du(double u) const {
    return 2.0 * drop_transmission_slope(couplers, u) / t_peak;
  }
  double detune_for(double w) const {  // invert weight_at on [0, umax]
    const double t = std::clamp((w + 1.0) * 0.5 * t_peak,
                                drop_transmission(couplers, umax), t_peak);
    double lo = 0.0, hi = umax;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (drop_transmission(couplers, mid) > t ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace detail

// Per-sample SGD with the device in the loop: forward and the hidden-delta
// product run optically, outer-product gradients and updates are electronic.
// After each round the training-set correct rate is measured; with a target
// rate set, training stops at the first round that reaches it.
inline TrainResult train(const MlpSpec& spec, const Mat& x,
                         const std::vector<int>& y, const TrainConfig& cfg,
                         Backend& b1, Backend& b2,
                         const MlpWeights* init = nullptr) {
  spec.validate();
  cfg.validate();
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw DimensionMismatch("train: sample/label count mismatch");
  if (x.cols() != spec.inputs) throw DimensionMismatch("train: feature width");
  for (int t : y)
    if (t < 0 || t >= spec.outputs) throw OutOfRange("train: label out of range");

  std::mt19937 rng(cfg.seed);
  MlpEngine engine(spec, b1, b2);
  TrainResult res;
  res.weights = init ? *init : MlpWeights::random_init(spec, rng);

  const bool phase_mode = cfg.update_mode == UpdateMode::phase_domain;
  detail::PhaseLaw law;
  Mat u1, u2;  // virtual detunes behind each weight (phase mode only)
  if (phase_mode) {
    law = detail::PhaseLaw::make(b1.size());
    auto to_detunes = [&](const Mat& w) {
      return Mat::NullaryExpr(w.rows(), w.cols(), [&](Eigen::Index i, Eigen::Index j) {
        return law.detune_for(w(i, j));
      });
    };
    u1 = to_detunes(res.weights.w1);
    u2 = to_detunes(res.weights.w2);
    auto from_detunes = [&](const Mat& u) {
      return Mat::NullaryExpr(u.rows(), u.cols(), [&](Eigen::Index i, Eigen::Index j) {
        return law.weight_at(u(i, j));
      });
    };
    res.weights.w1 = from_detunes(u1);  // snap init onto the reachable law
    res.weights.w2 = from_detunes(u2);
  }

  long version = 0;
  auto tag1 = [&]() { return "w1#" + std::to_string(version); };
  auto tag2 = [&]() { return "w2#" + std::to_string(version); };

  const int n = static_cast<int>(x.rows());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int round = 1; round <= cfg.rounds; ++round) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (int idx : order) {
      const Vec xs = x.row(idx).transpose();
      Vec z1, h;
      const Vec z2 = engine.forward(res.weights, xs, tag1(), tag2(), &z1, &h);
      const Vec p = softmax(z2);
      const int t = y[static_cast<size_t>(idx)];
      loss_sum += -std::log(std::max(p(t), 1e-300));

      Vec d2 = p;
      d2(t) -= 1.0;
      const Vec d1 = engine.hidden_delta(res.weights, d2, z1, tag2());

      const Mat g2 = d2 * h.transpose();
      const Mat g1 = d1 * xs.transpose();
      if (!phase_mode) {
        const double c = cfg.weight_scale;
        res.weights.w2 = (res.weights.w2 - cfg.learning_rate * g2)
                             .array().max(-c).min(c).matrix();
        res.weights.w1 = (res.weights.w1 - cfg.learning_rate * g1)
                             .array().max(-c).min(c).matrix();
      } else {
        // Newton step on the detune coordinate: dividing by the slope makes
        // the realized weight step track lr * g wherever the flank responds.
        // The raw chain rule is hopeless here -- the slope spans 0 (on
        // resonance) to ~-22 (mid flank), so any single rate either freezes
        // the tails or detonates the transition. Flooring the slope
        // magnitude keeps flat regions finite and lets railed rings drift
        // back toward the responsive flank.
        auto step = [&](Mat& u, Mat& w, const Mat& g) {
          for (Eigen::Index i = 0; i < u.rows(); ++i)
            for (Eigen::Index j = 0; j < u.cols(); ++j) {
              const double s =
                  std::min(law.dweight_du(u(i, j)), -detail::kSlopeFloor);
              u(i, j) = std::clamp(u(i, j) - cfg.learning_rate * g(i, j) / s,
                                   0.0, law.umax);
              w(i, j) = law.weight_at(u(i, j));
            }
        };
        step(u2, res.weights.w2, g2);
        step(u1, res.weights.w1, g1);
      }
      ++version;
    }

    int correct = 0;
    for (int i = 0; i < n; ++i) {
      const Vec z2 = engine.forward(res.weights, x.row(i).transpose(), tag1(), tag2());
      if (argmax_index(z2) == y[static_cast<size_t>(i)]) ++correct;
    }
    RoundStat st;
    st.round = round;
    st.mean_loss = loss_sum / n;
    st.correct_rate = static_cast<double>(correct) / n;
    res.curve.push_back(st);
    res.rounds_run = round;
    if (cfg.target_rate > 0 && st.correct_rate >= cfg.target_rate) {
      res.reached_target = true;
      break;
    }
  }
  return res;
}

// Classify a dataset; with backends the logits come off the device, without
// them the digital reference is used.
inline EvalResult evaluate(const MlpSpec& spec, const MlpWeights& w, const Mat& x,
                           const std::vector<int>& y, Backend* b1 = nullptr,
                           Backend* b2 = nullptr) {
  spec.validate();
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw DimensionMismatch("evaluate: sample/label count mismatch");
  EvalResult r;
  r.confusion = Eigen::MatrixXi::Zero(spec.outputs, spec.outputs);
  static long eval_serial = 0;
  const std::string t1 = "eval1#" + std::to_string(++eval_serial);
  const std::string t2 = "eval2#" + std::to_string(eval_serial);
  std::optional<MlpEngine> engine;
  if (b1 && b2) engine.emplace(spec, *b1, *b2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec xs = x.row(i).transpose();
    const Vec z2 = engine ? engine->forward(w, xs, t1, t2)
                          : mlp_forward_digital(spec, w, xs);
    const int pred = argmax_index(z2);
    r.predicted.push_back(pred);
    const int truth = y[static_cast<size_t>(i)];
    if (pred == truth) ++r.correct;
    r.confusion(truth, pred) += 1;
  }
  return r;
}

// Central-difference gradient of the softmax cross-entropy loss; the slow
// reference that validates the optical backward pass.
inline MlpWeights fd_gradient(const MlpSpec& spec, const MlpWeights& w,
                              const Vec& x, int label, double eps = 1e-6) {
  auto loss = [&](const MlpWeights& ww) {
    const Vec p = softmax(mlp_forward_digital(spec, ww, x));
    return -std::log(std::max(p(label), 1e-300));
  };
  MlpWeights g;
  g.w1 = Mat::Zero(w.w1.rows(), w.w1.cols());
  g.w2 = Mat::Zero(w.w2.rows(), w.w2.cols());
  MlpWeights probe = w;
  auto fill = [&](Mat& gm, Mat& pm) {
    for (Eigen::Index i = 0; i < gm.rows(); ++i)
      for (Eigen::Index j = 0; j < gm.cols(); ++j) {
        const double keep = pm(i, j);
        pm(i, j) = keep + eps;
        const double up = loss(probe);
        pm(i, j) = keep - eps;
        const double dn = loss(probe);
        pm(i, j) = keep;
        gm(i, j) = (up - dn) / (2 * eps);
      }
  };
  fill(g.w1, probe.w1);
  fill(g.w2, probe.w2);
  return g;
}

}  // namespace mrrxbar
