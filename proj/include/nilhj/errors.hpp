#pragma once

#include <stdexcept>
#include <string>

namespace nilhj {

/// Malformed or inconsistent arguments (bad dimensions, misaligned times, ...).
struct InputError : std::runtime_error {
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad experiment configuration (unknown key, missing key, unparsable value).
struct ConfigError : InputError {
  explicit ConfigError(const std::string& what) : InputError(what) {}
};

/// A discrete search hit the edge of its sampling range: the answer is not
/// trusted at the current resolution (velocity ball, momentum grid, ...).
struct ResolutionError : std::runtime_error {
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

/// A minimizer landed on the boundary of its search region (box too small).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative scheme failed to reach its tolerance.
struct NonconvergenceError : std::runtime_error {
  double best_residual;
  NonconvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), best_residual(residual) {}
};

/// A bounded search (BFS cap, memory budget) was exhausted.
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nilhj
