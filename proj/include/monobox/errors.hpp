#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace monobox {

enum class ErrorCode {
  kDepthTooSmall,
  kDegenerateOrientation,
  kNonpositiveDistance,
  kMaxIterations,
  kRankDeficient,
  kNotConverged,
  kZeroIntersection,
  kEmptyDetections,
  kMalformedLine,
  kMissingP2,
  kRejectionOverflow,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDepthTooSmall: return "DepthTooSmall";
    case ErrorCode::kDegenerateOrientation: return "DegenerateOrientation";
    case ErrorCode::kNonpositiveDistance: return "NonpositiveDistance";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kZeroIntersection: return "ZeroIntersection";
    case ErrorCode::kEmptyDetections: return "EmptyDetections";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kMissingP2: return "MissingP2";
    case ErrorCode::kRejectionOverflow: return "RejectionOverflow";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace monobox
