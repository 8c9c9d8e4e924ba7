#include "util/error.hpp"

namespace crl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSyntax: return "MalformedSyntax";
    case ErrorCode::UnknownDeviceName: return "UnknownDeviceName";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DuplicateDevice: return "DuplicateDevice";
    case ErrorCode::InvalidDuty: return "InvalidDuty";
    case ErrorCode::InconsistentIncidence: return "InconsistentIncidence";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
    case ErrorCode::SpaceExhausted: return "SpaceExhausted";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MissingConstraint: return "MissingConstraint";
    case ErrorCode::UntrainedBackend: return "UntrainedBackend";
    case ErrorCode::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::MalformedSequence: return "MalformedSequence";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::EmptyPromptSet: return "EmptyPromptSet";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::PhaseOrder: return "PhaseOrder";
    case ErrorCode::PoolStarvation: return "PoolStarvation";
  }
  return "Unknown";
}

}  // namespace crl
