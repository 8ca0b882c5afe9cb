#pragma once

#include <stdexcept>
#include <string>

namespace mpspectra {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (c <= 0, Im z <= 0, trials == 0, |a_k| > 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A precondition on structured input failed (non-symmetric or non-PSD
/// matrix, mismatched dimensions).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Quadrature, eigensolver or root selection failed to meet its contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A request would exceed the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpspectra
