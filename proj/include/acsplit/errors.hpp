#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace acsplit {

/// Invalid or inconsistent parameters (length mismatch, misaligned grids, bad config keys).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::invalid_argument(what), key_(std::move(key)) {}

  /// Offending config key, if the error came from a config file.
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Argument outside the mathematical domain of an operation (negative time, odd q, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A requested allocation exceeds the configured cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Monte Carlo experiment could not produce a valid estimate.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acsplit
