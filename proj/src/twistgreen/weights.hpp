#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "twistgreen/errors.hpp"

namespace twistgreen {

/// Normalizes nonnegative weights to sum 1. Empty input means uniform over n.
inline std::vector<double> normalized_weights(std::span<const double> w, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "no points to weight");
  if (w.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw Error(ErrorCode::kDimensionMismatch, "weights and points differ in length");
  double s = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "weights must be finite and >= 0");
    s += x;
  }
  if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "weights sum to zero");
  std::vector<double> out(w.begin(), w.end());
  for (double& x : out) x /= s;
  return out;
}

}  // namespace twistgreen
