#pragma once

#include <stdexcept>
#include <string>

namespace survbeta {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument violates a documented precondition (bad dimension, non-finite value, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but carries no usable information (no comparable pairs, empty split part).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Required column missing from a CSV header.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace survbeta
