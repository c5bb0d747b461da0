#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace flsim {

// User-facing configuration problem: bad config value, impossible partition,
// dimension mismatch. Maps to exit code 2 at the CLI boundary.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed on-disk container (bad magic, truncation). Also exit code 2.
class FormatError : public ConfigError {
 public:
  explicit FormatError(const std::string& msg) : ConfigError(msg) {}
};

class IoError : public ConfigError {
 public:
  explicit IoError(const std::string& msg) : ConfigError(msg) {}
};

// NaN gradients, diverged training, aborted rounds. Exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void log_notice(const std::string& msg) {
  std::fprintf(stderr, "[flsim] %s\n", msg.c_str());
}

inline void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[flsim] warning: %s\n", msg.c_str());
}

}  // namespace flsim
