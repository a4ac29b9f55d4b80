#pragma once

#include <stdexcept>
#include <string>

namespace stripeforge {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad camera parameters, shape
/// mismatches, malformed files). The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The delay + attack windows do not fit inside one frame period.
class WindowOverflowError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The sign projects entirely outside the sensor.
class NotVisibleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A detector found nothing above threshold.
class NoSignalError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace stripeforge
