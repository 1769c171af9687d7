#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guidec {

enum class ErrorCode {
  InvalidArgument,
  AdvancePastTerminal,
  NonFiniteInput,
  DimensionMismatch,
  EmptyCorpus,
  SequenceMissingEos,
  UnknownEvidenceId,
  MalformedModelFile,
  InvariantViolation,
  NonTerminalSequence,
  StateSpaceTooLarge,
  NonPositiveTemperature,
  NegativeKL,
  NegativeLambda,
  MissingGuidanceInput,
  DimensionTooLarge,
  PointTooCloseToBoundary,
  EmptyTraceSet,
  UnknownParameter,
  InvalidScenario,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library. The code names the condition; the
// message carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace guidec
