#pragma once

#include <stdexcept>
#include <string>

namespace msched {

// A physical or domain invariant was violated by the caller (e.g. a DG power
// outside its limits, an initial SOC outside the storage bounds).
class ConstraintViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An API was used out of sequence or with arguments outside its contract.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration values or configuration file contents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf surfaced in a gradient, loss or probability ratio.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration refused because the instance is too large.
class GuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Profile ingestion errors. Each failure mode has its own type so callers can
// tell them apart.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MissingFileError : public DataError {
 public:
  using DataError::DataError;
};
class MalformedRowError : public DataError {
 public:
  using DataError::DataError;
};
class NegativeValueError : public DataError {
 public:
  using DataError::DataError;
};
class ProfileLengthError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace msched
