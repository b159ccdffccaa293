#pragma once

#include <stdexcept>
#include <string>

namespace ebu {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, long iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

/// Malformed or unreadable data file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ebu
