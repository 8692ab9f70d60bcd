#pragma once

#include <stdexcept>
#include <string>

namespace objconf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A point violates the invariants of its space, or points of different
/// spaces were mixed.
class InvalidPoint : public Error {
public:
  using Error::Error;
};

/// No covariate falls inside the kernel window at the requested location.
class NoLocalData : public Error {
public:
  explicit NoLocalData(double x)
      : Error("no local data at x=" + std::to_string(x)), x_(x) {}
  double x() const noexcept { return x_; }

private:
  double x_;
};

/// An iterative solver did not converge within its iteration cap.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

} // namespace objconf
