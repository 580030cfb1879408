#pragma once

// Lyapunov spectra by QR renormalization, Oseledets subspace estimates,
// Birkhoff averages and the distance-vs-exponent inequalities.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "twistgreen/symgeo.hpp"
#include "twistgreen/tonelli.hpp"

namespace twistgreen::lyap {

using symgeo::SympBlockMat;

struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending
  long n_steps = 0;
  /// Running estimates of the sum of the top half of the spectrum.
  std::vector<double> tail;
  /// max - min of the tail over its final half.
  double band = 0.0;
  double zero_threshold = 0.0;
};

/// max(5 / sqrt(n), 1e-4).
double default_zero_threshold(double n);

struct MapSpectrumOptions {
  long n = 10000;
  int renorm_every = 1;
  long transient = 0;           // steps discarded before accumulating
  double zero_threshold = -1.0;  // < 0 selects the default
};

/// QR method on the cocycle, applied cyclically: step i uses cocycle[i % size].
/// Throws DegenerateCocycle.
LyapunovSpectrum lyapunov_spectrum_map(std::span<const SympBlockMat> cocycle, const MapSpectrumOptions& opts = {});

struct FlowSpectrumOptions {
  double t = 100.0;
  double renorm_every = 1.0;
  double transient = 0.0;
  double zero_threshold = -1.0;
  tonelli::FlowOptions flow;
};

LyapunovSpectrum lyapunov_spectrum_flow(const tonelli::TonelliHamiltonian& h, const tonelli::FlowState& x,
                                        const FlowSpectrumOptions& opts = {});

/// Sum of exponents above zero_threshold (0 when there are none).
double sum_positive(const LyapunovSpectrum& s);
/// Smallest exponent above zero_threshold. Throws NoPositiveExponent.
double smallest_positive(const LyapunovSpectrum& s);
/// Sum of the top half of the spectrum, i.e. the d non-negative exponents of a
/// symplectic cocycle.
double sum_upper_half(const LyapunovSpectrum& s);
/// max_i |lambda_i + lambda_{2d+1-i}|.
double pairing_defect(const LyapunovSpectrum& s);

enum class Which { kStable, kUnstable };

struct SubspaceEstimate {
  Matrix frame;  // orthonormal 2d x k
  Which which = Which::kUnstable;
  double residual = 0.0;
};

/// Pushes a seeded random k-frame n steps through the cyclic cocycle. With n a
/// multiple of the cocycle length the frame sits over the starting point.
/// residual = distance to the frame one whole number of cycles (about 10% of
/// n) earlier. Throws PartialResultError<SubspaceEstimate> (NoGap) when
/// residual > gap_tol.
SubspaceEstimate unstable_space_estimate(std::span<const SympBlockMat> cocycle, int k, long n,
                                         std::uint64_t seed, double gap_tol = 1e-8);

/// Cocycle of the inverse dynamics over the same cycle, starting at the same
/// point: element j is cocycle[N-1-j]^-1. Its unstable space is E^s.
std::vector<SympBlockMat> reversed_inverse(std::span<const SympBlockMat> cocycle);

/// Same as unstable_space_estimate on reversed_inverse, tagged kStable.
SubspaceEstimate stable_space_estimate(std::span<const SympBlockMat> cocycle, int k, long n,
                                       std::uint64_t seed, double gap_tol = 1e-8);

/// max over the cocycle of max(|M|, |M^-1|).
double cocycle_bound_constant(std::span<const SympBlockMat> cocycle);

struct WeightedOrbitMeasure {
  std::vector<double> weights;  // nonnegative, sum 1

  static WeightedOrbitMeasure uniform(std::size_t n);
  /// Trapezoid-rule weights for n equally spaced samples of a time interval.
  static WeightedOrbitMeasure trapezoid(std::size_t n);
  static WeightedOrbitMeasure from_weights(std::span<const double> w);
};

double birkhoff_average(std::span<const double> values, const WeightedOrbitMeasure& mu);
double birkhoff_average(const std::function<double(std::size_t)>& observable, const WeightedOrbitMeasure& mu);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool holds = false;
};

/// lambda_u - lambda_s <= log(1 + C^2 * dist), spectrum of a 2-dimensional cocycle.
BoundCheck general_bound_check_1d(const LyapunovSpectrum& s, double c, double dist_average, double tol = 1e-9);
/// Lambda_u - Lambda_s <= d log(1 + (C^2 + 1) dist) with d = half the spectrum size.
BoundCheck general_bound_check_dd(const LyapunovSpectrum& s, double c, double dist_average, double tol = 1e-9);

}  // namespace twistgreen::lyap
