#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>

namespace mrrxbar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// dB (power) -> linear gain factor
inline double db_to_gain(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

inline double wrap_two_pi(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w;
}

inline double clamp01(double v) { return v < 0 ? 0.0 : (v > 1 ? 1.0 : v); }

// Fixed-format float for CSV output; %.12g keeps files byte-stable across runs.
inline std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

}  // namespace mrrxbar
