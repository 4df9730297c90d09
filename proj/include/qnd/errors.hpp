#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qnd {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid inputs: malformed kernels, models, configs, files.
// The CLI maps these to exit code 2 (runtime failures map to 3).
struct ValidationError : Error {
  using Error::Error;
};

struct NegativeEntryError : ValidationError {
  NegativeEntryError(std::int64_t outcome, std::int64_t pointer)
      : ValidationError("negative kernel entry at outcome " + std::to_string(outcome) +
                        ", pointer " + std::to_string(pointer)),
        outcome(outcome),
        pointer(pointer) {}
  std::int64_t outcome;
  std::int64_t pointer;
};

// A pointer state's outcome distribution (one row of the stochastic matrix
// p(i|.), stored here as a column) does not sum to 1.
struct RowNotNormalizedError : ValidationError {
  RowNotNormalizedError(std::int64_t pointer, double deviation)
      : ValidationError("outcome distribution for pointer " + std::to_string(pointer) +
                        " not normalized, deviation " + std::to_string(deviation)),
        pointer(pointer),
        deviation(deviation) {}
  std::int64_t pointer;
  double deviation;
};

struct IndexMismatchError : ValidationError {
  using ValidationError::ValidationError;
};

struct NonUnitaryError : ValidationError {
  NonUnitaryError(std::int64_t pointer, double deviation)
      : ValidationError("operator for pointer " + std::to_string(pointer) +
                        " is not unitary, max deviation " + std::to_string(deviation)),
        pointer(pointer),
        deviation(deviation) {}
  std::int64_t pointer;
  double deviation;
};

struct ZeroProbabilityOutcomeError : Error {
  explicit ZeroProbabilityOutcomeError(std::int64_t outcome)
      : Error("outcome " + std::to_string(outcome) + " has zero probability"),
        outcome(outcome) {}
  std::int64_t outcome;
};

struct DegenerateKernelError : ValidationError {
  using ValidationError::ValidationError;
};

struct TreeTooLargeError : Error {
  using Error::Error;
};

struct InsufficientWindowError : Error {
  using Error::Error;
};

struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace qnd
