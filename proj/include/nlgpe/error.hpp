#pragma once

#include <stdexcept>
#include <string>

namespace nlgpe {

/// Raised when a numerical procedure cannot deliver a certified result
/// (non-convergence, oracle disagreement, broken monotone bracket).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised by the scenario layer; `key()` names the offending `section.key`.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace nlgpe
