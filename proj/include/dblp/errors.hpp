#pragma once

#include <stdexcept>
#include <string>

namespace dblp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Index or id outside the valid range of a table.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, training, or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed (missing columns, bad labels, empty sets).
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A serialized file is corrupt or uses an unsupported format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An objective evaluated to NaN or infinity.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dblp
