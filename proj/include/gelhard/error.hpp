#pragma once

#include <stdexcept>
#include <string>

namespace gelhard {

// Process exit codes shared by every CLI verb.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kDivergence = 4,
};

/// Base of all toolkit errors. `code()` is a stable machine-readable tag
/// (e.g. "E_NO_CONTACT") printed as the prefix of CLI error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what, ExitCode exit = ExitCode::kData)
      : std::runtime_error(what), code_(std::move(code)), exit_(exit) {}

  const std::string& code() const noexcept { return code_; }
  ExitCode exit_code() const noexcept { return exit_; }

 private:
  std::string code_;
  ExitCode exit_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("E_DOMAIN", what) {}
};

// Press deeper than the gel can take.
class SaturationError : public Error {
 public:
  explicit SaturationError(const std::string& what) : Error("E_SATURATION", what) {}
};

class NoContactError : public Error {
 public:
  explicit NoContactError(const std::string& what) : Error("E_NO_CONTACT", what) {}
};

class ClipTooShortError : public Error {
 public:
  explicit ClipTooShortError(const std::string& what) : Error("E_CLIP_TOO_SHORT", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("E_CONFIG", what, ExitCode::kUsage) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("E_DATA", what) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what)
      : Error("E_DIVERGENCE", what, ExitCode::kDivergence) {}
};

}  // namespace gelhard
