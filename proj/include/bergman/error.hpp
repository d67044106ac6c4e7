#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad coefficients, empty composition, ...).
class InputError : public Error {
public:
  using Error::Error;
};

/// A request outside the region where a finite section is exact, or an
/// index/bounds violation.
class WindowError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure failed (tracing did not close, singular level, ...).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Orthogonalization ran out of linearly independent directions.
class DegenerateMeasure : public NumericalError {
public:
  DegenerateMeasure(const std::string& what, int degree_reached)
    : NumericalError(what), degree_reached_(degree_reached) {}

  int degree_reached() const noexcept { return degree_reached_; }

private:
  int degree_reached_;
};

} // namespace bergman
