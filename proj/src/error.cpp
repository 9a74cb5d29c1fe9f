#include "svo/error.hpp"

namespace svo {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAngleNearPi: return "AngleNearPi";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kInsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kDegenerateMap: return "DegenerateMap";
    case ErrorCode::kDegenerateHomography: return "DegenerateHomography";
    case ErrorCode::kAllOccluded: return "AllOccluded";
    case ErrorCode::kZeroFeature: return "ZeroFeature";
    case ErrorCode::kNonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoValidEdges: return "NoValidEdges";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::kMagicMismatch: return "MagicMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace svo
