#pragma once

#include <stdexcept>
#include <string>

namespace splinecos {

/// Raised for invalid inputs: bad configuration, out-of-domain supports,
/// dimension mismatches. The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine fails at run time (e.g. a precision
/// matrix that is not positive definite). The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splinecos
