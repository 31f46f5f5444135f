#pragma once

#include <stdexcept>
#include <string>

namespace hybrid {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document; the message names the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

class DuplicateIdError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A collaborator returned data that breaks its documented contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A replay fixture or cache entry required in offline mode is absent.
class FixtureMissing : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Remote provider failure after all retries were spent.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, int status, int retries)
      : Error(what + " (status " + std::to_string(status) + ", retries " +
              std::to_string(retries) + ")"),
        status_(status),
        retries_(retries) {}

  int status() const noexcept { return status_; }
  int retries() const noexcept { return retries_; }

 private:
  int status_;
  int retries_;
};

}  // namespace hybrid
