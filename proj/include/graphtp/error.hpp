#pragma once

#include <stdexcept>
#include <string>

namespace graphtp {

// Base for every error raised by the library. The CLI maps subclasses onto
// process exit codes (see tools/graphtp.cpp).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class MalformedInput : public Error {
public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
public:
  using Error::Error;
};

class NumericalFailure : public Error {
public:
  explicit NumericalFailure(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}

  // Off-diagonal residual for eigensolver failures, 0 otherwise.
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

}  // namespace graphtp
