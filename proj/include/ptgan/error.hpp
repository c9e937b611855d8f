#pragma once

#include <stdexcept>
#include <string>

namespace ptgan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or bad input file. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A loss became non-finite during training. The CLI maps this to exit code 3.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace ptgan
