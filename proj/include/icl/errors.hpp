#pragma once

#include <stdexcept>
#include <string>

namespace icl {

// Base of every error the library raises. Each subclass maps onto one of the
// failure categories the CLI turns into exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised when a training loop produces a non-finite or exploding loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A requested configuration cannot be realized on the given data (too few
// complete rows, too few child columns for a MAR rate, too few samples).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace icl
