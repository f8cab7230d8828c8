#pragma once

#include <stdexcept>

namespace sgsg {

// Shape or dimension mismatch between tensors or layers.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file: annotations, rasters, checkpoints.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad key, inconsistent toggles, degenerate bounds.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted, e.g. non-finite loss.
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sgsg
