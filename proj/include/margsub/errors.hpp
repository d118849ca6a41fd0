#pragma once

#include <stdexcept>
#include <string>

namespace margsub {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (problem files, estimate files).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Input parsed but violates a type invariant; the message names the field.
class ValidationError : public Error {
public:
  using Error::Error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

/// A point lies outside dom F, or outside a set it was required to belong to.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Operation precondition not met (for example L' <= L1 in the penalty check).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Documented desk-scale limits exceeded.
class ScaleLimitError : public Error {
public:
  using Error::Error;
};

/// Pivoting stalled, iteration budgets exhausted, or a cross-check failed.
class NumericalError : public Error {
public:
  using Error::Error;
};

class ConvexityError : public Error {
public:
  using Error::Error;
};

/// A canned verification assertion failed.
class VerificationError : public Error {
public:
  using Error::Error;
};

} // namespace margsub
