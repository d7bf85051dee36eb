#ifndef BWF_ERROR_HPP
#define BWF_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bwf {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, invalid configuration, dimension mismatches.
// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Distribution parameters outside their domain, or arguments outside the
// support of a quantile function.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failure while computing (CLI exit code 3).
class ComputationError : public Error {
 public:
  using Error::Error;
};

// Non-finite value encountered while evaluating a log density.
class EvaluationError : public ComputationError {
 public:
  EvaluationError(const std::string& what, std::size_t coordinate)
      : ComputationError(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

}  // namespace bwf

#endif  // BWF_ERROR_HPP
