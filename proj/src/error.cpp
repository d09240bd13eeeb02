#include "otimpute/error.hpp"

namespace otimpute {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ColumnAllMissing: return "ColumnAllMissing";
    case ErrorKind::MaskedRead: return "MaskedRead";
    case ErrorKind::BatchTooLarge: return "BatchTooLarge";
    case ErrorKind::InvalidRate: return "InvalidRate";
    case ErrorKind::CalibrationFailure: return "CalibrationFailure";
    case ErrorKind::InfeasibleRate: return "InfeasibleRate";
    case ErrorKind::InvalidCost: return "InvalidCost";
    case ErrorKind::InvalidWeights: return "InvalidWeights";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoMissingEntries: return "NoMissingEntries";
    case ErrorKind::RegistryMismatch: return "RegistryMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace otimpute
