#pragma once

#include <cmath>
#include <vector>

#include "mrrxbar/channel_plan.hpp"
#include "mrrxbar/errors.hpp"
#include "mrrxbar/ring.hpp"

namespace mrrxbar {

inline double channel_spacing_phase(int n) {
  if (n < 1) throw ConfigError("channel_spacing_phase: n must be >= 1");
  return std::min(8.0 * kPi / (3.0 * n), kTwoPi);
}

// Smallest quality factor whose drop response, half a channel spacing away,
// has already fallen to the b-bit quantum. Closed form: with loop factor
// x = r^2 and the lossless symmetric drop ratio (1-x)^2 / (1 - 2x cos(phi) +
// x^2) set equal to 2^-b at phi = delta_phi/2, x solves x^2 - 2 beta x + 1 =
// 0 with beta = (2^b - cos(delta_phi/2)) / (2^b - 1).
inline double required_q(int n, int b, const RingGeometry& g = RingGeometry{}) {
  if (b < 1) throw ConfigError("required_q: b must be >= 1");
  const double c = std::cos(0.5 * channel_spacing_phase(n));
  const double pow2b = std::pow(2.0, b);
  const double beta = (pow2b - c) / (pow2b - 1.0);
  const double x = beta - std::sqrt(beta * beta - 1.0);
  return kPi * g.group_index_ng * g.length_L * std::sqrt(x) /
         (g.resonance_wavelength * (1.0 - x));
}

// Largest array size a given quality factor can isolate at b bits: invert
// Q -> x, x -> cos(delta_phi/2), delta_phi -> n.
inline int max_circuit_size(double q, int b = 8,
                            const RingGeometry& g = RingGeometry{}) {
  if (q <= 0) throw ConfigError("max_circuit_size: q must be > 0");
  if (b < 1) throw ConfigError("max_circuit_size: b must be >= 1");
  // Q(x) is monotone increasing on (0,1)
  double lo = 1e-12, hi = 1.0 - 1e-15;
  auto q_of_x = [&](double x) {
    return kPi * g.group_index_ng * g.length_L * std::sqrt(x) /
           (g.resonance_wavelength * (1.0 - x));
  };
  if (q <= q_of_x(lo)) throw UnachievableQ("max_circuit_size: q too small");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q_of_x(mid) < q ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  const double pow2b = std::pow(2.0, b);
  const double beta = (x * x + 1.0) / (2.0 * x);
  const double c = pow2b - beta * (pow2b - 1.0);
  // c is the largest admissible cos(delta_phi/2); beta > 1 keeps c < 1, and
  // c <= -1 means even two channels a half-FSR apart cannot be isolated
  if (c <= -1.0)
    throw UnachievableQ("max_circuit_size: q below the 2-channel floor");
  const double delta_phi = 2.0 * std::acos(c);
  return static_cast<int>(std::floor(8.0 * kPi / (3.0 * delta_phi)));
}

// 2 N^2 multiply-accumulates per symbol clock.
inline double tops(int n, double clock_hz = 3e9) {
  return 2.0 * n * n * clock_hz / 1e12;
}

struct PowerParams {
  double clock_hz = 3e9;
  double conversion_energy_j = 6.6e-12;  // laser/DAC/ADC chain, per channel
  double phase_shifter_power_w = 0.02;   // static drive for a pi shift

  static PowerParams thermo_optic() { return {}; }
  static PowerParams moscap() {
    PowerParams p;
    p.phase_shifter_power_w = 0.0;  // capacitive tuning, no static draw
    return p;
  }
};

// N conversion chains plus N^2 phase shifters driven, on average, half a
// channel spacing (N^2 * P_pi * (delta_phi/2)/pi collapses to 4N/3 * P_pi).
inline double power_mvm(int n, const PowerParams& p = {}) {
  return p.clock_hz * p.conversion_energy_j * n +
         (4.0 * n / 3.0) * p.phase_shifter_power_w;
}

inline double efficiency_tops_per_w(int n, const PowerParams& p = {}) {
  return tops(n, p.clock_hz) / power_mvm(n, p);
}

struct TrainingTime {
  double backprop_s = 0.0;     // per update: forward + backward + offset pass
  double brute_force_s = 0.0;  // per update: 2 passes for each of 2N^2 weights
  double ratio = 0.0;
};

inline TrainingTime training_time(int n, double clock_hz = 3e9) {
  TrainingTime t;
  t.backprop_s = 3.0 / clock_hz;
  t.brute_force_s = 2.0 * n * n * 2.0 / clock_hz;
  t.ratio = t.brute_force_s / t.backprop_s;
  return t;
}

struct BenchPoint {
  int n = 0;
  double required_q = 0.0;
  double tops = 0.0;
  double power_to_w = 0.0;
  double power_mos_w = 0.0;
  double eff_to = 0.0;
  double eff_mos = 0.0;
};

inline std::vector<BenchPoint> scaling_table(const std::vector<int>& sizes,
                                             int b = 8,
                                             double clock_hz = 3e9) {
  std::vector<BenchPoint> out;
  PowerParams to = PowerParams::thermo_optic();
  PowerParams mos = PowerParams::moscap();
  to.clock_hz = mos.clock_hz = clock_hz;
  for (int n : sizes) {
    BenchPoint p;
    p.n = n;
    p.required_q = required_q(n, b);
    p.tops = tops(n, clock_hz);
    p.power_to_w = power_mvm(n, to);
    p.power_mos_w = power_mvm(n, mos);
    p.eff_to = p.tops / p.power_to_w;
    p.eff_mos = p.tops / p.power_mos_w;
    out.push_back(p);
  }
  return out;
}

}  // namespace mrrxbar
