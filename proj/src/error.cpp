#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::NegativePresence: return "NegativePresence";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyBacktranslationSet: return "EmptyBacktranslationSet";
    case ErrorCode::NonPositiveSlope: return "NonPositiveSlope";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::LayoutDoesNotFit: return "LayoutDoesNotFit";
    case ErrorCode::RenderFailure: return "RenderFailure";
    case ErrorCode::JudgeProtocolError: return "JudgeProtocolError";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingLanguage: return "MissingLanguage";
    case ErrorCode::MissingPrompt: return "MissingPrompt";
    case ErrorCode::NoParticipants: return "NoParticipants";
    case ErrorCode::InsufficientParticipants: return "InsufficientParticipants";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::TaskNotFound: return "TaskNotFound";
    case ErrorCode::TaskNotOpen: return "TaskNotOpen";
    case ErrorCode::InvalidBbox: return "InvalidBbox";
    case ErrorCode::OutOfRangeLabel: return "OutOfRangeLabel";
    case ErrorCode::WrongTaskKind: return "WrongTaskKind";
  }
  return "Unknown";
}

}  // namespace forge
