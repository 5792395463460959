#pragma once

#include <stdexcept>
#include <string>

namespace damp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands of a binary operation disagree (length, kind, metric).
class InvalidOperands : public Error {
 public:
  using Error::Error;
};

// Input outside the domain an encoder or operation was built for.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

// Bad configuration value; the message starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace damp
