#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace haegan {

enum class ErrorKind {
  InvalidArgument,
  Config,
  Numerical,
  Invariant,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }

// Raised when training produces a non-finite value; carries the step at which it happened.
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, std::int64_t step)
      : Error(ErrorKind::Numerical, what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace haegan
