#pragma once

#include <stdexcept>
#include <string>

namespace rdn {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix has non-finite entries or is not square.
class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

/// A scalar function was applied outside its domain on some eigenvalue.
class SpectrumDomainError : public Error {
 public:
  using Error::Error;
};

/// The operator X -> PX + XP (or a Newton system built on it) is singular.
class SingularOperator : public Error {
 public:
  using Error::Error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

/// The exponential map overflowed double precision.
class StepOverflow : public Error {
 public:
  using Error::Error;
};

/// Matrix is not a symmetric positive definite point.
class InvalidPoint : public Error {
 public:
  using Error::Error;
};

class InvalidRange : public Error {
 public:
  using Error::Error;
};

/// Search direction vanished at a point where the field does not.
class StationaryOfMerit : public Error {
 public:
  using Error::Error;
};

/// No trial step 2^-j, j <= j_max, satisfied the sufficient-decrease test.
class LineSearchFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace rdn
