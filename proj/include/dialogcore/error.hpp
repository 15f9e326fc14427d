#pragma once

#include <stdexcept>
#include <string>

namespace dialogcore {

// Malformed input data or invalid configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A power-law fit had too few usable points or a degenerate slope.
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An external HTTP service failed after retries or answered with a malformed
// payload. Maps to CLI exit code 3.
class ServiceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace dialogcore
