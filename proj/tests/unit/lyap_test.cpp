#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "twistgreen/errors.hpp"
#include "twistgreen/lyap.hpp"

namespace {

using namespace twistgreen;
using namespace twistgreen::lyap;
using symgeo::SympBlockMat;
using tgtest::Gen;
using tgtest::kPi;

const double kLogLambda = std::log((3.0 + std::sqrt(5.0)) / 2.0);

SympBlockMat m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return SympBlockMat::from_full(m);
}

// Tangent map of the standard map at the fixed point q = 1/2.
SympBlockMat fixed_point_df(double k) { return m2(1 + k, 1, k, 1); }

double log_lambda(double k) {
  const double tr = 2.0 + k;
  return std::log((tr + std::sqrt(tr * tr - 4.0)) / 2.0);
}

MapSpectrumOptions steps(long n, long transient = 0) {
  MapSpectrumOptions o;
  o.n = n;
  o.transient = transient;
  return o;
}

tonelli::FlowState at(double q, double p) { return {Vector::Constant(1, q), Vector::Constant(1, p), 0.0}; }

TEST(MapSpectrum, ConstantHyperbolicCocycle) {
  const std::vector<SympBlockMat> c{fixed_point_df(1.0)};
  const auto s = lyapunov_spectrum_map(c, steps(10000));
  ASSERT_EQ(s.exponents.size(), 2u);
  // Errors are O(1 / n) from the initial frame.
  EXPECT_NEAR(s.exponents[0], kLogLambda, 1e-3);
  EXPECT_NEAR(s.exponents[1], -kLogLambda, 1e-3);
  EXPECT_NEAR(s.exponents[0], 0.962424, 1e-3);
  EXPECT_EQ(s.n_steps, 10000);
  EXPECT_NEAR(s.zero_threshold, 0.05, 1e-15);
  EXPECT_LE(pairing_defect(s), 1e-12);
}

TEST(MapSpectrum, ShearHasZeroExponents) {
  const std::vector<SympBlockMat> c{m2(1, 1, 0, 1)};
  for (long n : {1000L, 10000L, 100000L}) {
    const auto s = lyapunov_spectrum_map(c, steps(n));
    const double bound = 2.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
    EXPECT_LE(std::abs(s.exponents[0]), bound);
    EXPECT_LE(std::abs(s.exponents[1]), bound);
    EXPECT_EQ(sum_positive(s), 0.0);
    EXPECT_THROW(smallest_positive(s), Error);
  }
}

TEST(MapSpectrum, PeriodTwoMatchesMonodromy) {
  const std::vector<SympBlockMat> c{m2(2, 1, 1, 1), m2(1, 0, 0.5, 1)};
  const Matrix mono = c[1].full() * c[0].full();
  const double tr = mono.trace();
  const double expect = std::log((tr + std::sqrt(tr * tr - 4.0)) / 2.0) / 2.0;
  const auto s = lyapunov_spectrum_map(c, steps(20000, 2000));
  EXPECT_NEAR(s.exponents[0], expect, 1e-4);
  EXPECT_NEAR(s.exponents[1], -expect, 1e-4);
}

TEST(MapSpectrum, TransientAndRenormalizationDoNotChangeTheLimit) {
  const std::vector<SympBlockMat> c{fixed_point_df(2.0)};
  MapSpectrumOptions a = steps(20000, 1000);
  MapSpectrumOptions b = a;
  b.renorm_every = 5;
  EXPECT_NEAR(lyapunov_spectrum_map(c, a).exponents[0], log_lambda(2.0), 1e-4);
  EXPECT_NEAR(lyapunov_spectrum_map(c, b).exponents[0], log_lambda(2.0), 1e-4);
}

TEST(MapSpectrum, KnownSpectrumUnderSymplecticConjugation) {
  Gen gen(31);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = gen.uniform(0.3, 1.5), b = gen.uniform(0.05, 0.25);
    Matrix diag = Matrix::Zero(4, 4);
    diag.diagonal() << std::exp(a), std::exp(b), std::exp(-a), std::exp(-b);
    const SympBlockMat p = gen.symplectic(2, 0.5);
    const SympBlockMat m = p * SympBlockMat::from_full(diag) * p.symplectic_inverse();
    ASSERT_TRUE(symgeo::check_symplectic(m, 1e-8));
    const std::vector<SympBlockMat> c{m};
    const auto s = lyapunov_spectrum_map(c, steps(20000, 2000));
    EXPECT_NEAR(s.exponents[0], a, 1e-3);
    EXPECT_NEAR(s.exponents[1], b, 1e-3);
    EXPECT_NEAR(s.exponents[2], -b, 1e-3);
    EXPECT_NEAR(s.exponents[3], -a, 1e-3);
    EXPECT_NEAR(sum_upper_half(s), a + b, 2e-3);
    EXPECT_NEAR(smallest_positive(s), b, 1e-3);
  }
}

TEST(MapSpectrum, PairingOnLongRandomProducts) {
  Gen gen(32);
  std::vector<SympBlockMat> c;
  for (int i = 0; i < 7; ++i) c.push_back(gen.symplectic(2, 0.8));
  // Boundary terms cancel once the frame has settled and n covers whole cycles.
  const auto s = lyapunov_spectrum_map(c, steps(7 * 14286, 7 * 1000));
  EXPECT_LE(pairing_defect(s), 1e-6);
  // Without a transient the initial frame leaves an O(1 / n) defect.
  const auto raw = lyapunov_spectrum_map(c, steps(100000));
  EXPECT_LE(pairing_defect(raw), 1e-3);
}

TEST(MapSpectrum, Validation) {
  EXPECT_THROW(lyapunov_spectrum_map({}, steps(10)), Error);
  const std::vector<SympBlockMat> mixed{fixed_point_df(1.0), SympBlockMat::identity(2)};
  try {
    lyapunov_spectrum_map(mixed, steps(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  const std::vector<SympBlockMat> zero{m2(0, 0, 0, 0)};
  try {
    lyapunov_spectrum_map(zero, steps(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCocycle);
  }
  const std::vector<SympBlockMat> one{fixed_point_df(1.0)};
  EXPECT_THROW(lyapunov_spectrum_map(one, steps(0)), Error);
}

TEST(Spectrum, ThresholdHelpers) {
  EXPECT_NEAR(default_zero_threshold(100.0), 0.5, 1e-15);
  EXPECT_NEAR(default_zero_threshold(1e12), 1e-4, 1e-18);
  LyapunovSpectrum s;
  s.exponents = {0.9, 0.02, -0.02, -0.9};
  s.zero_threshold = 0.05;
  EXPECT_NEAR(sum_positive(s), 0.9, 1e-15);
  EXPECT_NEAR(smallest_positive(s), 0.9, 1e-15);
  EXPECT_NEAR(sum_upper_half(s), 0.92, 1e-15);
  s.zero_threshold = 0.01;
  EXPECT_NEAR(sum_positive(s), 0.92, 1e-15);
  EXPECT_NEAR(smallest_positive(s), 0.02, 1e-15);
  s.exponents = {0.5, -0.4};
  EXPECT_NEAR(pairing_defect(s), 0.1, 1e-15);
}

TEST(FlowSpectrum, FlatTorusIsZero) {
  FlowSpectrumOptions o;
  o.t = 100.0;
  const tonelli::FlowState x{(Vector(2) << 0.1, 0.2).finished(), (Vector(2) << 0.3, -0.2).finished(), 0.0};
  const auto s = lyapunov_spectrum_flow(*tonelli::flat(2), x, o);
  ASSERT_EQ(s.exponents.size(), 4u);
  for (double e : s.exponents) EXPECT_LE(std::abs(e), 2.0 * std::log(o.t) / o.t);
  EXPECT_EQ(sum_positive(s), 0.0);
}

TEST(FlowSpectrum, PendulumEquilibrium) {
  FlowSpectrumOptions o;
  o.t = 100.0;
  const auto s = lyapunov_spectrum_flow(*tonelli::pendulum(), at(0, 0), o);
  EXPECT_NEAR(s.exponents[0], 1.0, 1e-2);
  EXPECT_NEAR(s.exponents[1], -1.0, 1e-2);
  EXPECT_NEAR(sum_positive(s), s.exponents[0], 1e-15);
}

TEST(FlowSpectrum, BandShrinksLikeOneOverT) {
  FlowSpectrumOptions a;
  a.t = 50.0;
  FlowSpectrumOptions b = a;
  b.t = 100.0;
  const auto h = tonelli::pendulum();
  const double band_a = lyapunov_spectrum_flow(*h, at(0, 0), a).band;
  const double band_b = lyapunov_spectrum_flow(*h, at(0, 0), b).band;
  ASSERT_GT(band_a, 0.0);
  const double ratio = band_b / band_a;
  EXPECT_GE(ratio, 0.4);
  EXPECT_LE(ratio, 0.6);
}

TEST(Subspaces, FixedPointEigenvectors) {
  const std::vector<SympBlockMat> c{fixed_point_df(1.0)};
  const auto u = unstable_space_estimate(c, 1, 200, 7);
  const auto s = stable_space_estimate(c, 1, 200, 7);
  EXPECT_EQ(u.which, Which::kUnstable);
  EXPECT_EQ(s.which, Which::kStable);
  // Df is symmetric; E^u has slope S+ and E^s has slope S-.
  EXPECT_NEAR(u.frame(1, 0) / u.frame(0, 0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-10);
  EXPECT_NEAR(s.frame(1, 0) / s.frame(0, 0), -(1.0 + std::sqrt(5.0)) / 2.0, 1e-10);
  EXPECT_NEAR(symgeo::subspace_distance(u.frame, s.frame), std::sqrt(2.0), 1e-10);
}

TEST(Subspaces, RotationHasNoGap) {
  const double a = 2 * kPi * (std::sqrt(2.0) - 1.0);
  const std::vector<SympBlockMat> c{m2(std::cos(a), -std::sin(a), std::sin(a), std::cos(a))};
  try {
    unstable_space_estimate(c, 1, 1000, 3);
    FAIL() << "expected NoGap";
  } catch (const PartialResultError<SubspaceEstimate>& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoGap);
    EXPECT_GT(e.partial().residual, 1e-8);
  }
}

TEST(Subspaces, ReversedInverseUndoesTheCycle) {
  Gen gen(33);
  std::vector<SympBlockMat> c;
  for (int i = 0; i < 4; ++i) c.push_back(gen.symplectic(1, 0.7));
  const auto r = reversed_inverse(c);
  Matrix prod = Matrix::Identity(2, 2);
  for (const auto& m : c) prod = m.full() * prod;
  for (const auto& m : r) prod = m.full() * prod;
  EXPECT_LE((prod - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Birkhoff, Examples) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  EXPECT_NEAR(birkhoff_average(v, WeightedOrbitMeasure::uniform(3)), 2.0, 1e-15);
  const auto trap = WeightedOrbitMeasure::trapezoid(3);
  EXPECT_NEAR(trap.weights[0], 0.25, 1e-15);
  EXPECT_NEAR(trap.weights[1], 0.5, 1e-15);
  const std::vector<double> w{3.0, 1.0, 0.0};
  EXPECT_NEAR(birkhoff_average(v, WeightedOrbitMeasure::from_weights(w)), 1.25, 1e-15);
  EXPECT_THROW(birkhoff_average(v, WeightedOrbitMeasure::uniform(2)), Error);
  EXPECT_THROW(WeightedOrbitMeasure::from_weights(std::vector<double>{0.0, 0.0}), Error);
}

TEST(Birkhoff, RotationalOrbitAveragesOutTheMean) {
  // cos(2 pi (x0 + n p / q)) over one period has mean zero.
  for (int q : {3, 5, 7, 13}) {
    const auto mu = WeightedOrbitMeasure::uniform(static_cast<std::size_t>(q));
    const double avg = birkhoff_average([q](std::size_t n) { return std::cos(2 * kPi * (0.123 + 2.0 * n / q)); }, mu);
    EXPECT_NEAR(avg, 0.0, 1e-14) << q;
  }
}

TEST(BoundChecks, FixedPointOfStandardMap) {
  const std::vector<SympBlockMat> c{fixed_point_df(1.0)};
  const auto s = lyapunov_spectrum_map(c, steps(10000, 1000));
  const double bound_c = cocycle_bound_constant(c);
  EXPECT_NEAR(bound_c, (3.0 + std::sqrt(5.0)) / 2.0, 1e-12);
  const BoundCheck b = general_bound_check_1d(s, bound_c, std::sqrt(2.0));
  EXPECT_TRUE(b.holds);
  EXPECT_NEAR(b.lhs, 2 * kLogLambda, 1e-3);
  EXPECT_NEAR(b.rhs, std::log1p(bound_c * bound_c * std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(b.rhs, 2.3696, 1e-4);
  EXPECT_NEAR(b.slack, b.rhs - b.lhs, 1e-15);
}

TEST(BoundChecks, HoldAcrossTheKScan) {
  for (double k = 0.5; k <= 10.0; k += 0.5) {
    const std::vector<SympBlockMat> c{fixed_point_df(k)};
    const auto s = lyapunov_spectrum_map(c, steps(10000, 1000));
    EXPECT_NEAR(s.exponents[0], log_lambda(k), 1e-3) << k;
    const auto u = unstable_space_estimate(c, 1, 200, 1);
    const auto st = stable_space_estimate(c, 1, 200, 1);
    const double dist = symgeo::subspace_distance(u.frame, st.frame);
    EXPECT_TRUE(general_bound_check_1d(s, cocycle_bound_constant(c), dist).holds) << k;
    EXPECT_TRUE(general_bound_check_dd(s, cocycle_bound_constant(c), dist).holds) << k;
  }
}

TEST(BoundChecks, ProductSystem) {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = 2;
  m(0, 2) = 1;
  m(2, 0) = 1;
  m(2, 2) = 1;
  m(1, 1) = 3;
  m(1, 3) = 1;
  m(3, 1) = 2;
  m(3, 3) = 1;
  const std::vector<SympBlockMat> c{SympBlockMat::from_full(m)};
  ASSERT_TRUE(symgeo::check_symplectic(c[0]));
  const auto s = lyapunov_spectrum_map(c, steps(10000, 1000));
  EXPECT_NEAR(sum_upper_half(s), log_lambda(1.0) + log_lambda(2.0), 1e-3);
  const auto u = unstable_space_estimate(c, 2, 200, 1);
  const auto st = stable_space_estimate(c, 2, 200, 1);
  const BoundCheck b = general_bound_check_dd(s, cocycle_bound_constant(c), symgeo::subspace_distance(u.frame, st.frame));
  EXPECT_TRUE(b.holds);
  EXPECT_NEAR(b.lhs, 2 * (log_lambda(1.0) + log_lambda(2.0)), 2e-3);
}

TEST(BoundChecks, Validation) {
  LyapunovSpectrum s;
  s.exponents = {1.0, 0.0, -1.0};
  EXPECT_THROW(general_bound_check_dd(s, 1.0, 0.5), Error);
  s.exponents = {1.0, 0.5, -0.5, -1.0};
  EXPECT_THROW(general_bound_check_1d(s, 1.0, 0.5), Error);
  EXPECT_THROW(general_bound_check_dd(s, 0.0, 0.5), Error);
  EXPECT_THROW(general_bound_check_dd(s, 1.0, -0.5), Error);
}

}  // namespace
