#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace twistgreen {

// Numeric values are part of the C ABI (see include/twistgreen/twistgreen.h).
enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kConjugatePoint = 3,
  kNoPositiveEigenvalue = 4,
  kRankDeficient = 5,
  kNewtonDivergence = 6,
  kSingularTwist = 7,
  kNonConvergence = 8,
  kSaddleDetected = 9,
  kMonotonicityViolation = 10,
  kNonPDDenominator = 11,
  kStepSizeUnderflow = 12,
  kDegenerateCocycle = 13,
  kNoGap = 14,
  kNoPositiveExponent = 15,
  kConfig = 16,
  kIo = 17,
  kInternal = 18,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// An error that still hands back the best result computed before failing.
template <class T>
class PartialResultError : public Error {
 public:
  PartialResultError(ErrorCode code, const std::string& message, T partial)
      : Error(code, message), partial_(std::move(partial)) {}

  const T& partial() const noexcept { return partial_; }

 private:
  T partial_;
};

}  // namespace twistgreen
