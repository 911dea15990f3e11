#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taste {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss) or was given unusable data.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A test-fold author leaked into a training set.
class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace taste
