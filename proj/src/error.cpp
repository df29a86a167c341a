#include "mavic/error.hpp"

namespace mavic {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::DanglingParent: return "DanglingParent";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::TooFewOutcomes: return "TooFewOutcomes";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorCode::AllZeroAccuracies: return "AllZeroAccuracies";
    case ErrorCode::ConstantSeries: return "ConstantSeries";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace mavic
