#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "mrrxbar/channel_plan.hpp"
#include "mrrxbar/common.hpp"
#include "mrrxbar/errors.hpp"
#include "mrrxbar/ring.hpp"

namespace mrrxbar {

enum class SummationMode { incoherent, coherent };

// drop_physical: weight = ring drop transmission (the hardware law).
// linear_ideal: weight = 1 - |detune|/umax, exact 0..1 endpoints; used by the
// ideal backend so reference configurations reproduce clean unit weights.
enum class WeightLaw { drop_physical, linear_ideal };

struct CrossbarConfig {
  int size_N = 4;
  MrrDevice device_template;
  ChannelPlan plan;
  double crossing_loss_db = 0.1;          // dB per waveguide intersection
  double waveguide_loss_db_per_cm = 2.0;  // dB/cm
  double pitch = 100e-6;                  // m between adjacent rings
  double thermal_coupling_kappa = 0.01;   // nearest-neighbour phase coupling
  double pd_responsivity = 1.0;           // A/W
  double pd_floor_current = 0.0;          // A
  double additive_noise_sigma = 0.0;      // relative, per PD
  SummationMode summation_mode = SummationMode::incoherent;
  bool spectral_leakage = true;
  WeightLaw weight_law = WeightLaw::drop_physical;

  void validate() const {
    if (size_N < 1) throw ConfigError("crossbar: size_N must be >= 1");
    if (crossing_loss_db < 0 || waveguide_loss_db_per_cm < 0 || pitch <= 0)
      throw ConfigError("crossbar: losses must be >= 0 and pitch > 0");
    if (pd_responsivity <= 0) throw ConfigError("crossbar: pd_responsivity must be > 0");
    if (pd_floor_current < 0) throw ConfigError("crossbar: pd_floor_current must be >= 0");
    if (thermal_coupling_kappa < 0 || thermal_coupling_kappa >= 1)
      throw ConfigError("crossbar: kappa must lie in [0,1)");
    if (plan.size() != size_N)
      throw ConfigError("crossbar: channel plan size does not match size_N");
  }

  bool lossless() const {
    return crossing_loss_db == 0.0 && waveguide_loss_db_per_cm == 0.0;
  }
};

// Device with Q ~= 9000 on the published ring geometry; the channel plan for
// N columns at b-bit isolation.
inline CrossbarConfig default_config(int N, int b = 8, double q = 9000.0) {
  CrossbarConfig cfg;
  cfg.size_N = N;
  RingGeometry geom = RingGeometry::make(62.8e-6, 4.2, 2.35, 1.55e-6);
  cfg.device_template = MrrDevice::make(geom, couplers_for_q(q, geom, 1.0));
  cfg.plan = plan_channels(N, cfg.device_template, b);
  return cfg;
}

// All non-idealities off, unit responsivity, linear weight law: the forward
// map is exactly the programmed matrix.
inline CrossbarConfig ideal_config(int N, int b = 8) {
  CrossbarConfig cfg = default_config(N, b);
  cfg.crossing_loss_db = 0.0;
  cfg.waveguide_loss_db_per_cm = 0.0;
  cfg.thermal_coupling_kappa = 0.0;
  cfg.pd_floor_current = 0.0;
  cfg.additive_noise_sigma = 0.0;
  cfg.spectral_leakage = false;
  cfg.weight_law = WeightLaw::linear_ideal;
  return cfg;
}

// Heater phases per ring; stored in [0, 2pi), in practice inside the plan's
// phase window so the thermal stencil below never sees wrap discontinuities.
struct PhaseMatrix {
  Mat phases;

  static PhaseMatrix zeros(int N) {
    PhaseMatrix p;
    p.phases = Mat::Zero(N, N);
    return p;
  }
  // every ring parked at its weight floor (full detune)
  static PhaseMatrix parked(const CrossbarConfig& cfg) {
    PhaseMatrix p = zeros(cfg.size_N);
    for (int i = 0; i < cfg.size_N; ++i)
      for (int j = 0; j < cfg.size_N; ++j) p.phases(i, j) = cfg.plan.off_phase(j);
    return p;
  }
};

// Per-port, per-channel optical power frame.
struct WdmFrame {
  Mat powers;          // (port, channel), W
  Mat optical_phases;  // rad; empty unless driving coherent summation

  // x_i on every channel of port i: the forward comb for y = W x.
  static WdmFrame comb(const Vec& x, int channels) {
    WdmFrame f;
    f.powers = Mat::Zero(x.size(), channels);
    for (int i = 0; i < x.size(); ++i)
      for (int k = 0; k < channels; ++k) f.powers(i, k) = x(i);
    return f;
  }
  // delta_j only on channel j of port j: the backward frame for W^T delta.
  static WdmFrame diag(const Vec& d) {
    WdmFrame f;
    f.powers = Mat::Zero(d.size(), d.size());
    for (int i = 0; i < d.size(); ++i) f.powers(i, i) = d(i);
    return f;
  }
  // unit probe: power p at (port, channel)
  static WdmFrame basis(int n, int port, int channel, double p = 1.0) {
    WdmFrame f;
    f.powers = Mat::Zero(n, n);
    f.powers(port, channel) = p;
    return f;
  }
};

struct PdReadout {
  Vec currents;  // A
};

// 4-neighbour additive thermal crosstalk on the stored phases.
inline Mat effective_phases(const CrossbarConfig& cfg, const Mat& set_phases) {
  const int N = cfg.size_N;
  if (set_phases.rows() != N || set_phases.cols() != N)
    throw DimensionMismatch("effective_phases: phase grid must be N x N");
  const double k = cfg.thermal_coupling_kappa;
  Mat eff = set_phases;
  if (k == 0.0) return eff;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double nb = 0.0;
      if (i > 0) nb += set_phases(i - 1, j);
      if (i + 1 < N) nb += set_phases(i + 1, j);
      if (j > 0) nb += set_phases(i, j - 1);
      if (j + 1 < N) nb += set_phases(i, j + 1);
      eff(i, j) = wrap_two_pi(set_phases(i, j) + k * nb);
    }
  return eff;
}

// Signed detune of ring (i,j) from its own channel.
inline double cell_detune(const CrossbarConfig& cfg, const Mat& eff, int i, int j) {
  return cfg.plan.rest_offset(j) + eff(i, j);
}

// Ring (i,j)'s drop response to light on channel k.
inline double ring_drop_at_channel(const CrossbarConfig& cfg, double detune_ij,
                                   int j, int k) {
  if (cfg.weight_law == WeightLaw::linear_ideal) {
    if (k != j) return 0.0;
    const double umax = cfg.plan.weight_detune_max();
    const double frac = std::min(std::abs(detune_ij) / umax, 1.0);
    return 1.0 - frac;
  }
  const double d = cfg.plan.detunes[static_cast<size_t>(k)] -
                   cfg.plan.detunes[static_cast<size_t>(j)] + detune_ij;
  return drop_transmission(cfg.device_template.couplers, d);
}

// Programmed weight of cell (i,j): its drop response on its own channel.
inline double weight_of(const CrossbarConfig& cfg, const Mat& eff, int i, int j) {
  return ring_drop_at_channel(cfg, cell_detune(cfg, eff, i, j), j, j);
}

// Forward route (i,j): along row i past j crossings, down column j past
// N-1-i more. Backward enters from the opposite ends: i + (N-1-j) hops.
inline int hops_forward(int N, int i, int j) { return j + (N - 1 - i); }
inline int hops_backward(int N, int i, int j) { return i + (N - 1 - j); }

inline double per_hop_db(const CrossbarConfig& cfg) {
  return cfg.crossing_loss_db + cfg.waveguide_loss_db_per_cm * (cfg.pitch * 100.0);
}

inline double path_gain_forward(const CrossbarConfig& cfg, int i, int j) {
  return db_to_gain(per_hop_db(cfg) * hops_forward(cfg.size_N, i, j));
}

inline double path_gain_backward(const CrossbarConfig& cfg, int i, int j) {
  return db_to_gain(per_hop_db(cfg) * hops_backward(cfg.size_N, i, j));
}

namespace detail {

// Shared propagation kernel. `backward` flips the roles: frame rows are
// column ports, readout rows are row-side PDs.
inline PdReadout propagate(const CrossbarConfig& cfg, const PhaseMatrix& phases,
                           const WdmFrame& frame, bool backward,
                           std::mt19937* rng) {
  cfg.validate();
  const int N = cfg.size_N;
  if (frame.powers.rows() != N || frame.powers.cols() != N)
    throw DimensionMismatch("propagate: frame must be N ports x N channels");
  if ((frame.powers.array() < 0).any())
    throw NegativeInput("propagate: optical powers must be >= 0");

  const bool coherent = cfg.summation_mode == SummationMode::coherent;
  const bool need_rng =
      (coherent && frame.optical_phases.size() == 0) || cfg.additive_noise_sigma > 0;
  if (need_rng && rng == nullptr)
    throw SimError("propagate: coherent/noisy evaluation needs an RNG");

  const Mat eff = effective_phases(cfg, phases.phases);
  Mat detune(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) detune(i, j) = cell_detune(cfg, eff, i, j);

  Vec power_sum = Vec::Zero(N);
  // per output line and channel: either power accumulation or field phasor
  std::vector<std::vector<std::complex<double>>> fields;
  Mat theta;  // one optical phase per source (port, channel)
  if (coherent) {
    fields.assign(static_cast<size_t>(N),
                  std::vector<std::complex<double>>(static_cast<size_t>(N), {0, 0}));
    if (frame.optical_phases.size() != 0) {
      if (frame.optical_phases.rows() != N || frame.optical_phases.cols() != N)
        throw DimensionMismatch("propagate: optical_phases must be N x N");
      theta = frame.optical_phases;
    } else {
      theta = Mat::Zero(N, N);
      std::uniform_real_distribution<double> uni(0.0, kTwoPi);
      for (int p = 0; p < N; ++p)
        for (int k = 0; k < N; ++k) theta(p, k) = uni(*rng);
    }
  }

  for (int port = 0; port < N; ++port) {
    for (int k = 0; k < N; ++k) {
      const double p_in = frame.powers(port, k);
      if (p_in == 0.0) continue;
      // ring (i,j): forward row=port sums into PD j; backward column=port
      // sums into row-side PD i.
      for (int other = 0; other < N; ++other) {
        const int i = backward ? other : port;
        const int j = backward ? port : other;
        if (!cfg.spectral_leakage && k != j) continue;
        const double t = ring_drop_at_channel(cfg, detune(i, j), j, k);
        const double g = backward ? path_gain_backward(cfg, i, j)
                                  : path_gain_forward(cfg, i, j);
        const int out = backward ? i : j;
        const double contrib = p_in * t * g;
        if (coherent) {
          fields[static_cast<size_t>(out)][static_cast<size_t>(k)] +=
              std::sqrt(contrib) * std::polar(1.0, theta(port, k));
        } else {
          power_sum(out) += contrib;
        }
      }
    }
  }
  if (coherent)
    for (int out = 0; out < N; ++out)
      for (int k = 0; k < N; ++k)
        power_sum(out) += std::norm(fields[static_cast<size_t>(out)][static_cast<size_t>(k)]);

  PdReadout r;
  r.currents = Vec::Zero(N);
  for (int out = 0; out < N; ++out) {
    double sig = cfg.pd_responsivity * power_sum(out);
    if (cfg.additive_noise_sigma > 0) {
      std::normal_distribution<double> noise(0.0, cfg.additive_noise_sigma);
      sig *= 1.0 + noise(*rng);
    }
    r.currents(out) = sig + cfg.pd_floor_current;
  }
  return r;
}

}  // namespace detail

inline PdReadout forward_propagate(const CrossbarConfig& cfg,
                                   const PhaseMatrix& phases, const WdmFrame& in,
                                   std::mt19937* rng = nullptr) {
  return detail::propagate(cfg, phases, in, false, rng);
}

inline PdReadout backward_propagate(const CrossbarConfig& cfg,
                                    const PhaseMatrix& phases, const WdmFrame& in,
                                    std::mt19937* rng = nullptr) {
  return detail::propagate(cfg, phases, in, true, rng);
}

struct SpectrumScan {
  std::vector<double> wavelengths;  // m
  Mat currents;                     // steps x N, A
};

// Sweep a unit-power single-wavelength probe on one input port.
inline SpectrumScan spectrum_scan(const CrossbarConfig& cfg,
                                  const PhaseMatrix& phases, int input_port,
                                  double lam_lo, double lam_hi, int steps) {
  cfg.validate();
  if (steps < 2) throw ConfigError("spectrum_scan: steps must be >= 2");
  if (input_port < 0 || input_port >= cfg.size_N)
    throw ConfigError("spectrum_scan: input port out of range");
  const int N = cfg.size_N;
  const Mat eff = effective_phases(cfg, phases.phases);
  SpectrumScan scan;
  scan.currents = Mat::Zero(steps, N);
  for (int s = 0; s < steps; ++s) {
    const double lam = lam_lo + (lam_hi - lam_lo) * s / (steps - 1);
    scan.wavelengths.push_back(lam);
    const double u_lam = phase_detune_at(cfg.device_template.geometry, lam);
    for (int j = 0; j < N; ++j) {
      const double d = u_lam - cfg.plan.detunes[static_cast<size_t>(j)] +
                       cell_detune(cfg, eff, input_port, j);
      const double t = cfg.weight_law == WeightLaw::linear_ideal
                           ? ring_drop_at_channel(cfg, d, j, j)
                           : drop_transmission(cfg.device_template.couplers, d);
      scan.currents(s, j) = cfg.pd_responsivity * t *
                                path_gain_forward(cfg, input_port, j) +
                            cfg.pd_floor_current;
    }
  }
  return scan;
}

}  // namespace mrrxbar
