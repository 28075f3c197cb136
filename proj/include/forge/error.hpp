#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorCode {
  MalformedRecord,
  DuplicateId,
  IoFailure,
  NegativePresence,
  InvalidArgument,
  EmptyBacktranslationSet,
  NonPositiveSlope,
  LengthMismatch,
  TooFewSamples,
  ConstantInput,
  DegenerateInput,
  InvalidCounts,
  EmptyBox,
  LayoutDoesNotFit,
  RenderFailure,
  JudgeProtocolError,
  TransportError,
  ConfigError,
  MissingLanguage,
  MissingPrompt,
  NoParticipants,
  InsufficientParticipants,
  EmptyText,
  ShapeMismatch,
  InvalidRange,
  TaskNotFound,
  TaskNotOpen,
  InvalidBbox,
  OutOfRangeLabel,
  WrongTaskKind,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace forge
