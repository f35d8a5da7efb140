#pragma once

#include <stdexcept>
#include <string>

namespace rpchol {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A scalar or structural argument is outside its documented domain.
class InvalidParameter : public Error {
public:
  using Error::Error;
};

// A matrix or vector argument violates a precondition (zero trace, non-psd, ...).
class InvalidInput : public Error {
public:
  using Error::Error;
};

// No index is eligible as a pivot (empty active set, excluded index, ...).
class NoValidPivot : public Error {
public:
  using Error::Error;
};

// The requested computation needs information the caller did not provide,
// e.g. full row norms in the diagonal-only model.
class MissingInformation : public Error {
public:
  using Error::Error;
};

class NonConvergence : public Error {
public:
  using Error::Error;
};

// Two routes that must agree did not.
class EquivalenceFailure : public Error {
public:
  using Error::Error;
};

// A runtime-checked invariant failed during a run.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace rpchol
