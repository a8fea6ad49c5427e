#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xtsc {

enum class ErrorCode {
  InvalidShape,
  InvalidParameter,
  NonStationaryParameter,
  MaskInfeasible,
  DegenerateSeparation,
  ConstantFeature,
  FormatError,
  EmptySelection,
  DegenerateLabels,
  IllPosedSurrogate,
  DegenerateCorrelation,
  DegenerateAttribution,
  MissingCapability,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. Everything the library throws
/// on a contract violation is an Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace xtsc
