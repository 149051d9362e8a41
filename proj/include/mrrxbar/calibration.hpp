#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mrrxbar/crossbar.hpp"

namespace mrrxbar {

struct FeedbackParams {
  double gain = 0.5;        // fraction of the detune error applied per step
  double tolerance = 1e-3;  // weight units, absolute
  int max_rounds = 200;

  void validate() const {
    if (gain <= 0 || gain > 1) throw ConfigError("feedback: gain must be in (0,1]");
    if (tolerance <= 0) throw ConfigError("feedback: tolerance must be > 0");
    if (max_rounds < 1) throw ConfigError("feedback: max_rounds must be >= 1");
  }
};

// Representable weight range [floor, peak]: the drop transmission at full
// detune umax and on resonance.
inline std::pair<double, double> weight_bounds(const CrossbarConfig& cfg) {
  if (cfg.weight_law == WeightLaw::linear_ideal) return {0.0, 1.0};
  const double umax = cfg.plan.weight_detune_max();
  return {drop_transmission(cfg.device_template.couplers, umax),
          drop_transmission(cfg.device_template.couplers, 0.0)};
}

// |detune| in [0, umax] realizing weight w (drop law is even and strictly
// decreasing in |detune| up to pi, so bisection is safe).
inline double invert_weight(const CrossbarConfig& cfg, double w) {
  const double umax = cfg.plan.weight_detune_max();
  if (cfg.weight_law == WeightLaw::linear_ideal)
    return (1.0 - std::clamp(w, 0.0, 1.0)) * umax;
  const auto [w_min, w_max] = weight_bounds(cfg);
  if (w >= w_max) return 0.0;
  if (w <= w_min) return umax;
  double lo = 0.0, hi = umax;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (drop_transmission(cfg.device_template.couplers, mid) > w)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Single-cell probe: unit power on (port i, channel j) reaches PD j through
// ring (i,j) alone, so the weight reads back exactly (leakage lands on other
// PDs and pass-through light never enters column j's bus).
inline double measure_weight(const CrossbarConfig& cfg, const PhaseMatrix& phases,
                             int i, int j, std::mt19937* rng = nullptr) {
  const WdmFrame probe = WdmFrame::basis(cfg.size_N, i, j, 1.0);
  const PdReadout r = forward_propagate(cfg, phases, probe, rng);
  return (r.currents(j) - cfg.pd_floor_current) /
         (cfg.pd_responsivity * path_gain_forward(cfg, i, j));
}

struct CalibrationReport {
  PhaseMatrix phases;
  Mat target;          // as requested
  Mat target_clamped;  // clipped to the representable weight range
  Mat achieved;        // probed after the final round
  int rounds_used = 0;
  bool converged = false;
  double max_abs_error = 0.0;  // vs target_clamped
  long probes_used = 0;
};

// Iterative closed-loop programming. Each ring keeps a dead-reckoned signed
// detune estimate; every round refreshes its magnitude from the probed weight
// and its sign from the response slope seen across the previous step, then
// walks a damped step toward the target detune. Rounds repeat until a full
// pass needs no corrections (thermal crosstalk couples neighbours, so one
// pass is not enough).
inline CalibrationReport program_weights(const CrossbarConfig& cfg,
                                         const Mat& target,
                                         const FeedbackParams& fb = {},
                                         std::mt19937* rng = nullptr) {
  cfg.validate();
  fb.validate();
  const int N = cfg.size_N;
  if (target.rows() != N || target.cols() != N)
    throw DimensionMismatch("program_weights: target must be N x N");

  const auto [w_min, w_max] = weight_bounds(cfg);
  const double umax = cfg.plan.weight_detune_max();
  const double window = cfg.plan.phase_window();

  CalibrationReport rep;
  rep.target = target;
  rep.target_clamped = target.array().min(w_max).max(w_min).matrix();
  rep.phases = PhaseMatrix::parked(cfg);

  Mat delta_hat(N, N), delta_star(N, N);
  Mat prev_phi = Mat::Zero(N, N), prev_m = Mat::Zero(N, N);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> have_prev(N, N);
  have_prev.setConstant(false);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double dir = cfg.plan.tune_dirs[static_cast<size_t>(j)];
      delta_hat(i, j) = cfg.plan.rest_offset(j) + rep.phases.phases(i, j);
      delta_star(i, j) = dir * invert_weight(cfg, rep.target_clamped(i, j));
    }

  for (int round = 1; round <= fb.max_rounds; ++round) {
    bool clean_pass = true;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double m = measure_weight(cfg, rep.phases, i, j, rng);
        ++rep.probes_used;
        if (std::abs(rep.target_clamped(i, j) - m) <= fb.tolerance) continue;
        clean_pass = false;

        const double dir = cfg.plan.tune_dirs[static_cast<size_t>(j)];
        const double phi = rep.phases.phases(i, j);
        // drop response falls with |detune|: a negative measured slope means
        // the ring sits on the positive-detune side
        double sign_hat = delta_hat(i, j) != 0.0
                              ? (delta_hat(i, j) > 0 ? 1.0 : -1.0)
                              : dir;
        if (have_prev(i, j) && std::abs(phi - prev_phi(i, j)) > 1e-9 &&
            m != prev_m(i, j)) {
          const double slope = (m - prev_m(i, j)) / (phi - prev_phi(i, j));
          sign_hat = slope < 0 ? 1.0 : -1.0;
        }
        delta_hat(i, j) =
            sign_hat * invert_weight(cfg, std::clamp(m, w_min, w_max));

        const double step = std::clamp(
            fb.gain * (delta_star(i, j) - delta_hat(i, j)), -0.5 * umax, 0.5 * umax);
        prev_phi(i, j) = phi;
        prev_m(i, j) = m;
        have_prev(i, j) = true;
        const double phi_new = std::clamp(phi + step, 0.0, window);
        delta_hat(i, j) += phi_new - phi;
        rep.phases.phases(i, j) = phi_new;
      }
    rep.rounds_used = round;
    if (clean_pass) {
      rep.converged = true;
      break;
    }
  }

  rep.achieved = Mat::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      rep.achieved(i, j) = measure_weight(cfg, rep.phases, i, j, rng);
      ++rep.probes_used;
    }
  rep.max_abs_error = (rep.achieved - rep.target_clamped).cwiseAbs().maxCoeff();
  return rep;
}

// --- separable backward-gain correction -----------------------------------
//
// Backward readouts of a programmed matrix differ from forward ones only by
// per-row / per-column path gains. Fit measured ~= diag(row_gain) * model *
// diag(col_gain) across K matrix pairs by alternating least squares; each
// update is the closed-form 1-D least-squares solution with the other side
// held fixed.

struct CorrectionParams {
  Vec row_gain;  // per output row i
  Vec col_gain;  // per input column j, gauge col_gain[0] = 1
  int sweeps_used = 0;
  double residual = 0.0;  // final sum of squares
};

inline CorrectionParams fit_separable_gains(const std::vector<Mat>& model,
                                            const std::vector<Mat>& measured,
                                            int max_sweeps = 500,
                                            double rel_tol = 1e-9) {
  if (model.empty() || model.size() != measured.size())
    throw DimensionMismatch("fit_separable_gains: need matching matrix lists");
  const auto rows = model.front().rows();
  const auto cols = model.front().cols();
  for (size_t k = 0; k < model.size(); ++k)
    if (model[k].rows() != rows || model[k].cols() != cols ||
        measured[k].rows() != rows || measured[k].cols() != cols)
      throw DimensionMismatch("fit_separable_gains: inconsistent shapes");

  CorrectionParams p;
  p.row_gain = Vec::Ones(rows);
  p.col_gain = Vec::Ones(cols);

  auto objective = [&]() {
    double s = 0.0;
    for (size_t k = 0; k < model.size(); ++k) {
      const Mat pred =
          p.row_gain.asDiagonal() * model[k] * p.col_gain.asDiagonal();
      s += (measured[k] - pred).squaredNorm();
    }
    return s;
  };

  double prev = objective();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (int j = 0; j < cols; ++j) {
      double num = 0.0, den = 0.0;
      for (size_t k = 0; k < model.size(); ++k)
        for (int i = 0; i < rows; ++i) {
          const double bt = p.row_gain(i) * model[k](i, j);
          num += measured[k](i, j) * bt;
          den += bt * bt;
        }
      if (den <= 0.0)
        throw DegenerateFit("fit_separable_gains: column " + std::to_string(j) +
                            " carries no signal");
      p.col_gain(j) = std::max(num / den, 1e-12);
    }
    for (int i = 0; i < rows; ++i) {
      double num = 0.0, den = 0.0;
      for (size_t k = 0; k < model.size(); ++k)
        for (int j = 0; j < cols; ++j) {
          const double ta = model[k](i, j) * p.col_gain(j);
          num += measured[k](i, j) * ta;
          den += ta * ta;
        }
      if (den <= 0.0)
        throw DegenerateFit("fit_separable_gains: row " + std::to_string(i) +
                            " carries no signal");
      p.row_gain(i) = std::max(num / den, 1e-12);
    }
    // gauge: fold the overall scale into row_gain
    const double c = p.col_gain(0);
    p.col_gain /= c;
    p.row_gain *= c;

    const double cur = objective();
    p.sweeps_used = sweep;
    p.residual = cur;
    if (std::abs(prev - cur) <= rel_tol * std::max(prev, 1e-30)) break;
    prev = cur;
  }
  return p;
}

}  // namespace mrrxbar
