#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hirpcn {

enum class ErrorCode {
  // taxonomy
  DuplicateCode,
  OrphanNode,
  CycleDetected,
  LevelMismatch,
  UnknownCode,
  IncoherentPath,
  // corpus
  ParseError,
  SchemaError,
  ConfigInvalid,
  // interdisciplinary graph
  EmptySource,
  SelfEdge,
  UnknownNode,
  // tensor engine
  ShapeMismatch,
  NotScalar,
  NotRecorded,
  OddDim,
  MissingGrad,
  CheckpointFormat,
  // model
  IncoherentHistory,
  UnknownDiscipline,
  LevelOutOfRange,
  LengthMismatch,
  IncoherentGiven,
  // trainer
  NonFiniteLoss,
  EmptyEvalSet,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hirpcn
