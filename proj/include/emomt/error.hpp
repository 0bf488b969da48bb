#pragma once

#include <stdexcept>
#include <string>

namespace emomt {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation precondition (wrong template, misaligned inputs).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Data failed an invariant (duplicate id, out-of-range score, bad split label).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A single malformed record in a line-oriented file.
class RecordError : public ValidationError {
 public:
  RecordError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Something that should cover a set of ids does not.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Remote endpoint could not be reached or answered garbage.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Training/generation backend failed; message carries its diagnostics.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace emomt
