#pragma once

#include <stdexcept>
#include <string>

namespace patchsr {

// Shape or size mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range scalar parameter (negative sigma, even kernel size, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The proximal subproblem is not strictly convex for the requested
// (penalty, weight) pair, so its minimizer may not be unique.
class ConvexityGateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite value produced during an iterative solve.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

// Malformed dictionary, PSF or image file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pixel left uncovered by the patch layout during aggregation.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace patchsr
