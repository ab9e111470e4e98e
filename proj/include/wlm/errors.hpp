#ifndef WLM_ERRORS_HPP_
#define WLM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace wlm {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input: bad dimensions, out-of-range parameters, inconsistent config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: non-finite values, P.3 violations, loss of definiteness.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Cholesky factorization broke down on a matrix that should have been SPD.
class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// An inner iterative solver hit its iteration cap.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace wlm

#endif  // WLM_ERRORS_HPP_
