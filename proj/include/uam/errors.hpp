#pragma once

#include <stdexcept>
#include <string>

namespace uam {

// Every failure surfaced by the library derives from Error so callers (the
// CLI in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpecError : public Error {  // invalid physical specification
 public:
  using Error::Error;
};

class DomainError : public Error {  // argument outside the function domain
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownKeyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidValueError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {  // caller broke a documented precondition
 public:
  using Error::Error;
};

class LifecycleError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace uam
