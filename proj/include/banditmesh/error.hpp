#pragma once

#include <stdexcept>
#include <string>

namespace banditmesh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value (law parameters, sizes, unknown keys).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition (index out of range, bad argument).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Updates applied out of round order.
class SequencingError : public Error {
 public:
  using Error::Error;
};

/// Two summaries share (origin, stamp) but differ in content.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Requested a closed form the reward law does not have.
class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

/// Kappa calibration produced too many timeouts.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace banditmesh
