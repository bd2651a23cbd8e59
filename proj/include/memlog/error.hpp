#pragma once

#include <stdexcept>
#include <string>

namespace memlog {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

// Raised by execute when a transaction cannot run; the store is unchanged.
class AbortError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MalformedLogError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RecoveryError : public Error {
 public:
  using Error::Error;
};

}  // namespace memlog
