#pragma once

#include <cmath>

#include "mrrxbar/common.hpp"
#include "mrrxbar/errors.hpp"

namespace mrrxbar {

// Ring circumference, indices and the resonance the device is referenced to.
// The effective index is snapped on construction so that an integer number of
// wavelengths fits the ring exactly at resonance_wavelength.
struct RingGeometry {
  double length_L = 62.8e-6;            // m, circumference
  double group_index_ng = 4.2;
  double eff_index_neff = 2.3447452229299363;
  double resonance_wavelength = 1.55e-6;  // m

  static RingGeometry make(double length, double ng, double neff_nominal,
                           double lam_res) {
    if (length <= 0 || lam_res <= 0)
      throw ConfigError("ring geometry: length and wavelength must be positive");
    if (ng < 1 || neff_nominal < 1)
      throw ConfigError("ring geometry: indices must be >= 1");
    RingGeometry g;
    g.length_L = length;
    g.group_index_ng = ng;
    g.resonance_wavelength = lam_res;
    // snap: m = round(neff*L/lam), then neff = m*lam/L puts a resonance
    // exactly at lam_res
    const double m = std::round(neff_nominal * length / lam_res);
    g.eff_index_neff = m * lam_res / length;
    return g;
  }

  double order_m() const {
    return std::round(eff_index_neff * length_L / resonance_wavelength);
  }
};

struct CouplerSet {
  double r1 = 0.95;  // self-coupling, field amplitude
  double r2 = 0.95;
  double a = 1.0;    // single-pass amplitude transmission

  void validate() const {
    if (!(r1 > 0 && r1 < 1) || !(r2 > 0 && r2 < 1))
      throw ConfigError("couplers: r1, r2 must lie in (0,1)");
    if (!(a > 0 && a <= 1)) throw ConfigError("couplers: a must lie in (0,1]");
  }

  double x() const { return r1 * r2 * a; }  // loop amplitude factor
};

struct MrrDevice {
  RingGeometry geometry;
  CouplerSet couplers;
  double heater_phase = 0.0;  // rad, additive round-trip offset, kept in [0,2pi)

  static MrrDevice make(const RingGeometry& g, const CouplerSet& c,
                        double heater = 0.0) {
    c.validate();
    MrrDevice d;
    d.geometry = g;
    d.couplers = c;
    d.heater_phase = wrap_two_pi(heater);
    return d;
  }
};

// Drop-port power transmission of an add-drop ring at round-trip phase phi.
inline double drop_transmission(const CouplerSet& c, double phi) {
  const double x = c.x();
  const double num = (1 - c.r1 * c.r1) * (1 - c.r2 * c.r2) * c.a;
  const double den = 1 - 2 * x * std::cos(phi) + x * x;
  return num / den;
}

inline double drop_transmission(const MrrDevice& dev, double phi) {
  return drop_transmission(dev.couplers, phi);
}

// Through-port power transmission.
inline double pass_transmission(const CouplerSet& c, double phi) {
  const double x = c.x();
  const double cphi = std::cos(phi);
  const double num = c.r2 * c.r2 * c.a * c.a - 2 * x * cphi + c.r1 * c.r1;
  const double den = 1 - 2 * x * cphi + x * x;
  return num / den;
}

inline double pass_transmission(const MrrDevice& dev, double phi) {
  return pass_transmission(dev.couplers, phi);
}

// d(Td)/d(phi): analytic slope used by the phase-domain training mode.
inline double drop_transmission_slope(const CouplerSet& c, double phi) {
  const double x = c.x();
  const double num = (1 - c.r1 * c.r1) * (1 - c.r2 * c.r2) * c.a;
  const double den = 1 - 2 * x * std::cos(phi) + x * x;
  return -num * 2 * x * std::sin(phi) / (den * den);
}

// Round-trip phase with first-order dispersion:
//   neff(lam) = neff + (lam - lam_res) * (neff - ng) / lam_res
// which gives d(phi)/d(lam) = -2 pi ng L / lam^2 and collapses to the exact
// identity phi = 2 pi m - 2 pi ng L (1/lam_res - 1/lam).
inline double round_trip_phase(const MrrDevice& dev, double wavelength) {
  const RingGeometry& g = dev.geometry;
  const double neff_lam =
      g.eff_index_neff + (wavelength - g.resonance_wavelength) *
                             (g.eff_index_neff - g.group_index_ng) /
                             g.resonance_wavelength;
  return kTwoPi * neff_lam * g.length_L / wavelength + dev.heater_phase;
}

// Phase detune from the m-th resonance at a given wavelength (heater excluded).
inline double phase_detune_at(const RingGeometry& g, double wavelength) {
  return -kTwoPi * g.group_index_ng * g.length_L *
         (1.0 / g.resonance_wavelength - 1.0 / wavelength);
}

// Inverse of phase_detune_at: wavelength whose round-trip phase sits `detune`
// radians from resonance. Positive detune -> shorter wavelength.
inline double wavelength_for_detune(const RingGeometry& g, double detune) {
  return 1.0 / (1.0 / g.resonance_wavelength +
                detune / (kTwoPi * g.group_index_ng * g.length_L));
}

inline double quality_factor(const MrrDevice& dev) {
  const double x = dev.couplers.x();
  if (x >= 1.0)
    throw DegenerateResonator("quality_factor: r1*r2*a >= 1");
  const RingGeometry& g = dev.geometry;
  return kPi * g.group_index_ng * g.length_L * std::sqrt(x) /
         (g.resonance_wavelength * (1.0 - x));
}

inline double photon_lifetime(const MrrDevice& dev) {
  return dev.geometry.resonance_wavelength * quality_factor(dev) /
         (kTwoPi * kSpeedOfLight);
}

inline double free_spectral_range(const MrrDevice& dev) {
  const RingGeometry& g = dev.geometry;
  return g.resonance_wavelength * g.resonance_wavelength /
         (g.group_index_ng * g.length_L);
}

// Full width (in round-trip phase) of the drop resonance at half maximum.
// 2(1-x)/sqrt(x) is the form consistent with the Q expression above.
inline double drop_fwhm_phase(const CouplerSet& c) {
  const double x = c.x();
  return 2.0 * (1.0 - x) / std::sqrt(x);
}

// Symmetric couplers (r1 = r2) achieving a target Q at fixed ring loss a.
// Bracketed bisection on r; Q(r) is monotone increasing.
inline CouplerSet couplers_for_q(double target_q, const RingGeometry& g,
                                 double a = 1.0) {
  if (target_q <= 0) throw ConfigError("couplers_for_q: target_q must be > 0");
  auto q_of_r = [&](double r) {
    const double x = r * r * a;
    return kPi * g.group_index_ng * g.length_L * std::sqrt(x) /
           (g.resonance_wavelength * (1.0 - x));
  };
  double lo = 1e-9, hi = 1.0 - 1e-12;
  if (q_of_r(hi) < target_q)
    throw UnachievableQ("couplers_for_q: target Q not reachable with a = " +
                        format_num(a));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q_of_r(mid) < target_q ? lo : hi) = mid;
  }
  CouplerSet c;
  c.r1 = c.r2 = 0.5 * (lo + hi);
  c.a = a;
  return c;
}

}  // namespace mrrxbar
