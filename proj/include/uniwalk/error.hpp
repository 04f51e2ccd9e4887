#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uniwalk {

/// Invalid argument or configuration value.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Filesystem failure (missing path, unreadable file, write error).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data. Carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  std::size_t line = 0;
  ParseError(const std::string& msg, std::size_t line_number)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + msg),
        line(line_number) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Two ratings observed for the same (user, item) pair.
struct DuplicateRatingError : ParseError {
  using ParseError::ParseError;
};

/// Corrupt, truncated, or version-incompatible model file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite parameter.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An external id was not found where one was required.
struct LookupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uniwalk
