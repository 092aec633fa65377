#pragma once

#include <stdexcept>
#include <string>

namespace eps2 {

// Error kinds surfaced to callers and to the CLI exit-code mapping.
struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedPrimitive : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AnchorMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyIntersection : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DensityTooLow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace eps2
