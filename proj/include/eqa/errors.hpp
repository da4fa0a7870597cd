#pragma once

#include <stdexcept>
#include <string>

namespace eqa {

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnreachableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvTooSmallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlacementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: config files, flags, unknown keys. Maps to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or version-mismatched files on disk.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eqa
