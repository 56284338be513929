#pragma once

#include <stdexcept>
#include <string>

namespace wgain {

/// Input or configuration that violates a documented precondition.
/// The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an API contract (shape mismatch, wrong scenario variant).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Reading or decoding external data failed.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint is unreadable, corrupted, or incompatible.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical fault in the model (non-finite loss or parameter).
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wgain
