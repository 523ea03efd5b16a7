#pragma once

#include <stdexcept>

namespace vfa {

// Base of all library errors. The CLI maps InputError to exit code 2 and
// NumericError to exit code 3; see tools/vfa_main.cpp.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

struct MissingKeypoint : InputError { using InputError::InputError; };
struct InvalidOrientation : InputError { using InputError::InputError; };
struct DegenerateVertebra : InputError { using InputError::InputError; };
struct ClassMismatch : InputError { using InputError::InputError; };
struct EmptyBatch : InputError { using InputError::InputError; };
struct EmptyTruth : InputError { using InputError::InputError; };
struct EmptyPatient : InputError { using InputError::InputError; };
struct SingleClass : InputError { using InputError::InputError; };
struct InsufficientData : InputError { using InputError::InputError; };
struct InsufficientNeighbors : InputError { using InputError::InputError; };
struct MismatchedSets : InputError { using InputError::InputError; };
struct UnreachableSeverity : InputError { using InputError::InputError; };
struct IdMismatch : InputError { using InputError::InputError; };
struct ParseError : InputError { using InputError::InputError; };
struct ModelParse : InputError { using InputError::InputError; };

struct NonFiniteDensity : NumericError { using NumericError::NumericError; };
struct Diverged : NumericError { using NumericError::NumericError; };

}  // namespace vfa
