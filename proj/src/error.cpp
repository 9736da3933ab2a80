#include "hirpcn/error.hpp"

namespace hirpcn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateCode: return "DuplicateCode";
    case ErrorCode::OrphanNode: return "OrphanNode";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::LevelMismatch: return "LevelMismatch";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::IncoherentPath: return "IncoherentPath";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::SelfEdge: return "SelfEdge";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::NotRecorded: return "NotRecorded";
    case ErrorCode::OddDim: return "OddDim";
    case ErrorCode::MissingGrad: return "MissingGrad";
    case ErrorCode::CheckpointFormat: return "CheckpointFormat";
    case ErrorCode::IncoherentHistory: return "IncoherentHistory";
    case ErrorCode::UnknownDiscipline: return "UnknownDiscipline";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IncoherentGiven: return "IncoherentGiven";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace hirpcn
