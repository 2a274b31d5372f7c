#ifndef SOUNDLAB_ERRORS_HPP
#define SOUNDLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace soundlab {

// Raised for malformed inputs: bad grid sizes, mismatched grids, invalid
// potential parameters, rejected configs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a solver produces nonfinite values or fails to converge. The
// message names the offending time or wavevector.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace soundlab

#endif  // SOUNDLAB_ERRORS_HPP
