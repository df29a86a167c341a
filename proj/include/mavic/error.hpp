#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mavic {

enum class ErrorCode {
  CycleDetected,
  MultipleRoots,
  DuplicateName,
  DanglingParent,
  UnknownNode,
  EmptyPath,
  SchemaMismatch,
  EmptyCorpus,
  EmptyGroup,
  TooFewOutcomes,
  DimensionMismatch,
  LengthMismatch,
  InvalidDistribution,
  InvalidConfig,
  InfeasibleGeometry,
  AllZeroAccuracies,
  ConstantSeries,
  InvalidInput,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every recoverable failure in the library carries one of the codes above so
// the CLI and the C interface can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mavic
