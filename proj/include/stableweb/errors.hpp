#pragma once

#include <stdexcept>
#include <string>

namespace stableweb {

// Invalid parameters or malformed input; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource cap was hit (event queue, path buffers); exit code 3.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency violation (inconsistent event log, uncomputed ages).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace stableweb
