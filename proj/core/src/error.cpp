#include "choroid/error.hpp"

namespace choroid {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kMissingFile: return "missing-file";
    case ErrorCode::kUnreadableImage: return "unreadable-image";
    case ErrorCode::kMalformedSidecar: return "malformed-sidecar";
    case ErrorCode::kInvalidPixelScale: return "invalid-pixel-scale";
    case ErrorCode::kWrongDimensions: return "wrong-dimensions";
    case ErrorCode::kInvalidOffset: return "invalid-offset";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kUnreachableTarget: return "unreachable";
    case ErrorCode::kEmptyRegion: return "empty-region";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidWindow: return "invalid-window";
    case ErrorCode::kMissingRow: return "missing-row";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kInsufficientSupport: return "insufficient-support";
    case ErrorCode::kNoFoveaRoi: return "no-fovea-roi";
    case ErrorCode::kMissingFovea: return "missing-fovea";
    case ErrorCode::kUndefinedIndex: return "undefined-index";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kSingleClass: return "single-class";
    case ErrorCode::kUndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kTooFew: return "too-few";
    case ErrorCode::kInvalidSpec: return "invalid-spec";
  }
  return "unknown";
}

}  // namespace choroid
