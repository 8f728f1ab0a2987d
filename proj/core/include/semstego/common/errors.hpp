#pragma once

#include <stdexcept>
#include <string>

namespace semstego {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Image or patch geometry does not line up (divisibility, shape mismatch).
class GeometryError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Malformed file, manifest, checkpoint or config.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace semstego
