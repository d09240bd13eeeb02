#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otimpute {

enum class ErrorKind {
  ColumnAllMissing,
  MaskedRead,
  BatchTooLarge,
  InvalidRate,
  CalibrationFailure,
  InfeasibleRate,
  InvalidCost,
  InvalidWeights,
  DimensionMismatch,
  SizeMismatch,
  TooLarge,
  NoMissingEntries,
  RegistryMismatch,
  InvalidArgument,
  InvalidConfig,
  Diverged,
  NumericalFailure,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// All library failures are reported through this exception; `kind()` lets
/// callers branch on the failure without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace otimpute
