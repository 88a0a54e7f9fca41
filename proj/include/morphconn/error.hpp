#pragma once

#include <stdexcept>
#include <string>

namespace morphconn {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kValidation = 3,
  kRuntime = 4,
};

/// Base error. `code()` is a short machine-readable tag such as
/// "DuplicateIndex" or "NonFiniteValue"; `what()` carries the detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)), message_(message) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  virtual ExitCode exit_code() const noexcept { return ExitCode::kRuntime; }

 private:
  std::string code_;
  std::string message_;
};

/// Input data violates a format or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

/// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

/// Failure inside a computation stage (e.g. too few subjects after a split).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace morphconn
