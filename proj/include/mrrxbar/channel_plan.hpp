#pragma once

#include <cmath>
#include <vector>

#include "mrrxbar/common.hpp"
#include "mrrxbar/errors.hpp"
#include "mrrxbar/ring.hpp"

namespace mrrxbar {

// WDM channel layout for an N-column crossbar.
//
// Each channel owns a phase allocation delta_phi = 8*pi/(3N). Adjacent gaps
// alternate full / half (g, g/2, g, ...) because neighbouring columns tune
// their rings in opposite directions: a ring only ever detunes into a
// full-width gap, so the half gap is never approached closer than delta_phi/2.
struct ChannelPlan {
  std::vector<double> wavelengths;   // m, strictly ascending
  std::vector<double> detunes;       // rad relative to the template resonance,
                                     // strictly descending (maps to ascending wavelength)
  double delta_phi = 0.0;            // rad per channel
  int bit_precision_b = 8;
  std::vector<int> tune_dirs;        // per column: -1 tunes down in phase, +1 up

  int size() const { return static_cast<int>(wavelengths.size()); }

  // Weight tuning geometry. margin_frac reserves controller headroom inside
  // the channel's half-allocation so detuned rings never cross the
  // delta_phi/2 isolation distance to a foreign channel.
  static constexpr double kMarginFrac = 0.15;
  double weight_detune_max() const {
    return 0.5 * delta_phi / (1.0 + kMarginFrac);
  }
  double weight_margin() const { return kMarginFrac * weight_detune_max(); }
  // Stored heater phases for a column live in [0, phase_window()].
  double phase_window() const {
    return weight_detune_max() + 2.0 * weight_margin();
  }
  // Offset from stored phase to signed detune: detune = rest + stored.
  double rest_offset(int col) const {
    return -weight_margin() -
           (tune_dirs[static_cast<size_t>(col)] < 0 ? weight_detune_max() : 0.0);
  }
  // Stored phase parking a ring at full detune (weight floor, |detune|=umax).
  double off_phase(int col) const {
    return tune_dirs[static_cast<size_t>(col)] < 0
               ? weight_margin()
               : weight_detune_max() + weight_margin();
  }
};

inline ChannelPlan plan_channels(int N, const MrrDevice& dev, int b) {
  if (N < 1) throw ConfigError("plan_channels: N must be >= 1");
  if (b < 1) throw ConfigError("plan_channels: b must be >= 1");

  ChannelPlan plan;
  plan.bit_precision_b = b;
  plan.delta_phi = std::min(8.0 * kPi / (3.0 * N), kTwoPi);

  // channel isolation: worst-case ring-to-foreign-channel distance is
  // delta_phi/2; its drop leakage must stay below the b-bit quantum
  const double leak = drop_transmission(dev, 0.5 * plan.delta_phi) /
                      drop_transmission(dev, 0.0);
  const double bound = std::pow(2.0, -b);
  if (leak >= bound * (1.0 + 1e-6))
    throw UnachievableQ("plan_channels: insufficient Q for N=" +
                        std::to_string(N) + ", b=" + std::to_string(b) +
                        " (leakage " + format_num(leak) + " >= " +
                        format_num(bound) + ")");

  // alternating full/half gaps, centered on the template resonance
  std::vector<double> gaps;
  for (int k = 0; k + 1 < N; ++k)
    gaps.push_back(k % 2 == 0 ? plan.delta_phi : 0.5 * plan.delta_phi);
  double span = 0.0;
  for (double g : gaps) span += g;
  if (span >= kTwoPi)
    throw UnachievableQ("plan_channels: channel span exceeds one FSR");

  double u = 0.5 * span;
  for (int j = 0; j < N; ++j) {
    plan.detunes.push_back(u);
    plan.wavelengths.push_back(wavelength_for_detune(dev.geometry, u));
    plan.tune_dirs.push_back(j % 2 == 0 ? -1 : +1);
    if (j + 1 < N) u -= gaps[static_cast<size_t>(j)];
  }
  return plan;
}

}  // namespace mrrxbar
