#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable numeric data.
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Input carries no information to fit from (e.g. an all-zero snapshot matrix).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A discounted sum that does not converge (discount >= 1 on an infinite horizon).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A broken internal invariant rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Evaluation point too close to an eigenvalue of the resolvent.
class PoleProximityError : public Error {
 public:
  PoleProximityError(const std::string& what, std::complex<double> eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  std::complex<double> eigenvalue() const noexcept { return eigenvalue_; }

 private:
  std::complex<double> eigenvalue_;
};

}  // namespace kgen
