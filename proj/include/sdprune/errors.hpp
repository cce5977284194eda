#pragma once

#include <stdexcept>
#include <string>

namespace sdprune {

// Error categories map 1:1 onto CLI exit codes.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : ConfigError {
  explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Theory-fixture precondition failure (e.g. a group sign crossing).
struct FixtureAbort : std::runtime_error {
  double when;
  FixtureAbort(const std::string& msg, double t) : std::runtime_error(msg), when(t) {}
};

}  // namespace sdprune
