#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chfield {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside a function's domain (a <= 0, x <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Function value is infinite at the requested point.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Spectral density requested with alpha <= d/2.
class InfiniteDensityError : public DivergenceError {
 public:
  using DivergenceError::DivergenceError;
};

// Caller broke an API precondition (shapes, symmetry, structure).
class ContractError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCaseError : public Error {
 public:
  using Error::Error;
};

// Parameters (or an assembled matrix) do not give a valid covariance.
class ValidityError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& what, std::ptrdiff_t pivot)
      : Error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  std::ptrdiff_t pivot() const { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, long row)
      : ConfigError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

}  // namespace chfield
