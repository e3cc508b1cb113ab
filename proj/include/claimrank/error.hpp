#pragma once

#include <stdexcept>
#include <string>

namespace claimrank {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// validation/parse/config/shape -> 1, I/O -> 2, numeric -> 3.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : ValidationError {
  explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

struct ConfigError : ValidationError {
  explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

struct ShapeError : ValidationError {
  explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

// A prediction set that does not cover a split exactly (missing or extra keys).
struct CoverageError : ValidationError {
  explicit CoverageError(const std::string& msg) : ValidationError(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (e.g. NaN training loss).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace claimrank
