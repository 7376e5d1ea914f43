#pragma once

#include <stdexcept>
#include <string>

namespace robusta {

/// Base for every error raised by the toolkit. Carries the name of the module
/// that raised it so the CLI can print `ERROR <module>: <message>`.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// A caller violated an operation's precondition (wrong modality, bad shape...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A domain object failed its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file did not match its binary layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace robusta
