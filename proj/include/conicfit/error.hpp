#pragma once

#include <stdexcept>
#include <string>

namespace conicfit {

/// Broad failure category; the CLI maps these onto exit codes.
enum class ErrorKind {
  Input = 1,
  Numerical = 2,
  Config = 3,
};

class FitError : public std::runtime_error {
 public:
  FitError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& what) {
  throw FitError(ErrorKind::Input, what);
}

[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw FitError(ErrorKind::Numerical, what);
}

[[noreturn]] inline void fail_config(const std::string& what) {
  throw FitError(ErrorKind::Config, what);
}

}  // namespace conicfit
