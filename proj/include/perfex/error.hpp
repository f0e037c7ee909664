#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perfex {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CSV input. `row` is the 1-based data row (0 for the header).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class UnknownClassError : public ParseError {
 public:
  UnknownClassError(std::size_t row, const std::string& label)
      : ParseError(row, "unknown class label '" + label + "'"), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class MissingScoresError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible serialized document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace perfex
