#pragma once

#include <stdexcept>
#include <string>

namespace wtplogit {

// All library failures derive from Error so callers can catch once.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unknown column, malformed term.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Data present but violating an invariant (binary outcome, one chosen row, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Column has the wrong kind for its role, e.g. a categorical scale variable.
class ColumnTypeError : public Error {
 public:
  using Error::Error;
};

// Model specification inconsistent with itself or with the encoded data.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Request exceeds what a generator supports (dimension tables).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace wtplogit
