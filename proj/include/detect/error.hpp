#pragma once

#include <stdexcept>
#include <string>

namespace detect {

// Base for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record; carries the 1-based line number when known.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::size_t line = 0, const std::string& source = {})
      : Error(compose(message, line, source)), message_(message), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string compose(const std::string& message, std::size_t line, const std::string& source) {
    std::string out = source.empty() ? "" : source + ": ";
    if (line) out += "line " + std::to_string(line) + ": ";
    return out + message;
  }
  std::string message_;
  std::size_t line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Degenerate numeric input (zero variance, empty groups, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace detect
