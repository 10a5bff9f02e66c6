#ifndef TESSGOF_ERRORS_HPP
#define TESSGOF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tessgof {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few generators to build a tessellation.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Generators are not in general position (power-equidistance within tolerance).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed tessellation or config file. Carries the offending line (1-based, 0 if unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A structural invariant of a tessellation or complex does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// An iterative sampler did not reach a valid state.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Calibration and test phases were asked to share a seed stream.
class SeedReuseError : public Error {
 public:
  using Error::Error;
};

}  // namespace tessgof

#endif  // TESSGOF_ERRORS_HPP
