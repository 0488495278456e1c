#pragma once

#include <stdexcept>
#include <string>

namespace kc {

// Root of the toolkit's exception hierarchy. The CLI maps each branch to an
// exit code: UsageError/ConfigError -> 1, DataError -> 2, UpstreamError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (bad records, schema violations,
// dimension mismatches, unparseable programs, invalid model output).
class DataError : public Error {
 public:
  using Error::Error;
};

// Failures talking to an external service (HTTP errors, timeouts).
class UpstreamError : public Error {
 public:
  UpstreamError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace kc
