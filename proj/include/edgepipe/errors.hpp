#pragma once

#include <stdexcept>
#include <string>

namespace edgepipe {

/// Invalid protocol, grid, or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (I/O, parsing, dimensions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical precondition does not hold (step size, contraction, singular system).
class NumericalError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace edgepipe
