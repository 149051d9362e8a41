#pragma once

#include <stdexcept>
#include <string>

namespace mrrxbar {

// Base class for all simulator failures so callers can distinguish
// configuration mistakes (exit 1) from simulation-domain errors (exit 2).
struct SimError : std::runtime_error {
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : SimError {
  explicit DimensionMismatch(const std::string& what) : SimError(what) {}
};

// r1*r2*a >= 1: infinite-Q / non-physical resonator
struct DegenerateResonator : SimError {
  explicit DegenerateResonator(const std::string& what) : SimError(what) {}
};

// No coupling in (0,1) meets the requested Q or channel-isolation bound.
struct UnachievableQ : SimError {
  explicit UnachievableQ(const std::string& what) : SimError(what) {}
};

// Requested weight outside the device's achievable drop range.
struct UnreachableTarget : SimError {
  explicit UnreachableTarget(const std::string& what) : SimError(what) {}
};

// ALS scale fit with an all-zero row or column (scale unidentifiable).
struct DegenerateFit : SimError {
  explicit DegenerateFit(const std::string& what) : SimError(what) {}
};

struct OutOfRange : SimError {
  explicit OutOfRange(const std::string& what) : SimError(what) {}
};

struct NegativeInput : SimError {
  explicit NegativeInput(const std::string& what) : SimError(what) {}
};

}  // namespace mrrxbar
