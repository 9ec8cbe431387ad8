#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcpfl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent shapes or an invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied values outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// An operation invoked in the wrong lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during computation. `index` names the offending
// layer or client, depending on the raising operation.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace dcpfl
