#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace choroid {

enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kUnreadableImage,
  kMalformedSidecar,
  kInvalidPixelScale,
  kWrongDimensions,
  kInvalidOffset,
  kEmptyInput,
  kUnreachableTarget,
  kEmptyRegion,
  kInvalidConfig,
  kInvalidWindow,
  kMissingRow,
  kOutOfBounds,
  kInsufficientSupport,
  kNoFoveaRoi,
  kMissingFovea,
  kUndefinedIndex,
  kShapeMismatch,
  kSingleClass,
  kUndefinedCorrelation,
  kDegenerate,
  kTooFew,
  kInvalidSpec,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type thrown by every choroid operation. The code identifies the
/// failure class so callers (and tests) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace choroid
