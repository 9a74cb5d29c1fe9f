#pragma once

#include <stdexcept>
#include <string>

namespace svo {

enum class ErrorCode {
  kAngleNearPi,
  kBehindCamera,
  kNonFiniteFeature,
  kInsufficientCandidates,
  kEmptyPool,
  kImageTooSmall,
  kOutOfBounds,
  kDegenerateMap,
  kDegenerateHomography,
  kAllOccluded,
  kZeroFeature,
  kNonPositiveWeight,
  kSingularSystem,
  kNoValidEdges,
  kDimensionMismatch,
  kDegenerateGeometry,
  kInsufficientMatches,
  kParseError,
  kNonMonotoneTimestamps,
  kMagicMismatch,
  kInvalidArgument,
  kIoError,
};

const char* error_code_name(ErrorCode code);

// Every fatal failure in the library is reported as an svo::Error carrying a
// machine-checkable code. Non-fatal conditions (an edge behind the camera, a
// lookup outside the map) are returned as flags instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace svo
