#pragma once

#include <stdexcept>
#include <string>

namespace cka {

// Base class for every error the toolkit raises.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes do not satisfy an operation's requirements.
struct DimensionError : Error {
  using Error::Error;
};

// A norm fell below the guard threshold; dividing would produce NaN/Inf.
struct DegenerateInputError : Error {
  using Error::Error;
};

// Feature-map spatial dims are not divisible by the patch size.
struct PatchError : Error {
  using Error::Error;
};

// A constructor rejected ill-sized or non-finite data.
struct InvariantError : Error {
  using Error::Error;
};

// A training run diverged or a pinned default failed its contract.
struct TrainingError : Error {
  using Error::Error;
};

// A file could not be opened, read, or written.
struct IoError : Error {
  using Error::Error;
};

}  // namespace cka
