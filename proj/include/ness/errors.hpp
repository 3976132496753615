#pragma once

#include <stdexcept>
#include <string>

namespace ness {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter (negative strength, even wire length, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// k in {0, +-pi}: zero group velocity, no scattering state.
class DegenerateWavenumberError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values while propagating through the wire.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Computed quantity violates a hard consistency bound.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Caller combined inputs that do not belong together.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ness
