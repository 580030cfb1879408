#include "twistgreen/errors.hpp"

namespace twistgreen {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kConjugatePoint: return "ConjugatePoint";
    case ErrorCode::kNoPositiveEigenvalue: return "NoPositiveEigenvalue";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNewtonDivergence: return "NewtonDivergence";
    case ErrorCode::kSingularTwist: return "SingularTwist";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kSaddleDetected: return "SaddleDetected";
    case ErrorCode::kMonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::kNonPDDenominator: return "NonPDDenominator";
    case ErrorCode::kStepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::kDegenerateCocycle: return "DegenerateCocycle";
    case ErrorCode::kNoGap: return "NoGap";
    case ErrorCode::kNoPositiveExponent: return "NoPositiveExponent";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace twistgreen
