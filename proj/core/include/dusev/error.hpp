#pragma once

#include <stdexcept>
#include <string>

namespace dusev {

// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (bad observation, bad confidence, bad CSV row, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A value outside the mathematical domain of an operation (NaN score, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Incompatible matrix/tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (non-divisible model dim, zero batch size, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (diverged loss, bad grads).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem / stream failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file carries an unsupported version tag.
class CheckpointVersionError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file is truncated or structurally invalid.
class CheckpointParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dusev
