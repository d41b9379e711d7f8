/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every forge module.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace forge {

/// Base class for all forge errors; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad NIfTI header, truncated payload).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Stored values are incompatible with the requested volume type.
class DatatypeError : public Error {
 public:
  using Error::Error;
};

/// Label value or class reference not covered by the taxonomy.
class TaxonomyError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Channel or dimension mismatch between two operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Two volumes that must share a grid do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Invalid sampled or user-supplied transform parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data admits no meaningful answer (e.g. all paired differences zero).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Model score lists that cannot be paired subject by subject.
class PairingError : public Error {
 public:
  using Error::Error;
};

/// Configuration schema or range violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure inside one stage of sample generation; the message names the
/// stage and the sample seed.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace forge
