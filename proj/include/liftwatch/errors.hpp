#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace liftwatch {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (out-of-bounds pixel, zero-area box).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry: zero-length ray, grazing ray, undefined angle.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A world point that lands at or behind the camera plane.
class BehindCameraError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Caller broke an API contract (frame-tag or class mismatch).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Operation needs data that is not there (empty cloud, zero ground truths).
class NoDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input whose values violate the schema (unknown class, range).
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Raised by the motion script once a frame index runs past the scenario.
class EndOfScenario : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant failed; always a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace liftwatch
