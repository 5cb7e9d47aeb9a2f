#pragma once

#include <stdexcept>
#include <string>

namespace chns {

// Bad user input: grid sizes, config keys, incompatible field tags, ...
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solve failed to reach its tolerance within the iteration cap.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, int iterations_, double residual_)
      : std::runtime_error(what), iterations(iterations_), residual(residual_) {}
  int iterations;
  double residual;
};

} // namespace chns
