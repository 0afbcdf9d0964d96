#ifndef PFSGLD_ERRORS_HPP_
#define PFSGLD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pfsgld {

// Parameter or argument outside its admissible region.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Operation asked of a model that does not support it (e.g. Kalman on SVM).
struct UnsupportedModelError : DomainError {
  using DomainError::DomainError;
};

// Caller violated a structural precondition (e.g. stale GARCH variance).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Numerical failure at runtime (non-finite weights, divergence, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Particle filter collapse: every weight is zero at some time index.
struct DegenerateFilterError : NumericError {
  explicit DegenerateFilterError(int time_index)
      : NumericError("particle filter degenerate at t=" +
                     std::to_string(time_index)),
        t(time_index) {}
  int t;
};

// Malformed or inconsistent input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad CLI flags or config file contents.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pfsgld

#endif  // PFSGLD_ERRORS_HPP_
