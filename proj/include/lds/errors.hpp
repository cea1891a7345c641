#pragma once

#include <stdexcept>
#include <string>

namespace lds {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched alphabets, unknown labels, malformed shapes.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration would exceed its table-size cap. The message names the
/// Monte Carlo alternative.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Posterior has zero total mass.
class InferenceError : public Error {
 public:
  using Error::Error;
};

/// A required input (truth, optimal density, ...) was not supplied.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Every chart of a standard form has k == 0.
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

/// Input text could not be parsed. Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Config failed schema validation.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace lds
