#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "twistgreen/errors.hpp"
#include "twistgreen/twistmap.hpp"

namespace {

using namespace twistgreen;
using namespace twistgreen::twistmap;
using tgtest::Gen;
using tgtest::kGolden;
using tgtest::kPi;

Vector v1(double x) { return Vector::Constant(1, x); }

std::vector<Vector> constant_configs(double q, int n) { return std::vector<Vector>(n, v1(q)); }

// Closed-form standard map: Q = q + p - (K / 2 pi) sin(2 pi q), P = Q - q.
PhasePoint chirikov(double k, double q, double p) {
  const double qn = q + p - k / (2 * kPi) * std::sin(2 * kPi * q);
  return {v1(qn), v1(qn - q)};
}

// Phi_1 = -atan(Q - q) is bounded, so large momenta have no preimage.
class BoundedTwist final : public GeneratingFunction {
 public:
  int dim() const override { return 1; }
  double value(const Vector& q, const Vector& qn) const override {
    const double x = qn(0) - q(0);
    return x * std::atan(x) - 0.5 * std::log1p(x * x);
  }
  Vector d1(const Vector& q, const Vector& qn) const override { return v1(-std::atan(qn(0) - q(0))); }
  Vector d2(const Vector& q, const Vector& qn) const override { return v1(std::atan(qn(0) - q(0))); }
  Matrix d11(const Vector& q, const Vector& qn) const override { return c(q, qn); }
  Matrix d12(const Vector& q, const Vector& qn) const override { return -c(q, qn); }
  Matrix d22(const Vector& q, const Vector& qn) const override { return c(q, qn); }
  double twist_constant() const override { return 1e-3; }

 private:
  static Matrix c(const Vector& q, const Vector& qn) {
    const double x = qn(0) - q(0);
    return Matrix::Constant(1, 1, 1.0 / (1.0 + x * x));
  }
};

TEST(GeneratingFunction, BuiltInFamiliesPassTheContract) {
  EXPECT_TRUE(validate_generating_function(*standard_family(1.0), 1).ok);
  EXPECT_TRUE(validate_generating_function(*standard_family(0.0), 2).ok);
  const TrigTwistFamily coupled(TrigPolynomial(2, {{{1, 0}, 0.05, 0.0}, {{0, 1}, 0.03, 0.4}, {{1, -1}, 0.02, 1.1}}));
  const auto check = validate_generating_function(coupled, 3);
  EXPECT_TRUE(check.ok);
  EXPECT_LE(check.worst_twist, -1.0 + 1e-12);
}

TEST(ForwardMap, ShearAtZeroK) {
  Gen gen(1);
  const auto gf = standard_family(0.0);
  for (int i = 0; i < 20; ++i) {
    const double q = gen.uniform(-2, 2), p = gen.uniform(-3, 3);
    const PhasePoint x = forward_map(*gf, v1(q), v1(p));
    EXPECT_NEAR(x.q(0), q + p, 1e-12);
    EXPECT_NEAR(x.p(0), p, 1e-12);
  }
}

TEST(ForwardMap, FixedPointAtOneHalf) {
  const PhasePoint x = forward_map(*standard_family(1.0), v1(0.5), v1(0.0));
  EXPECT_NEAR(x.q(0), 0.5, 1e-15);
  EXPECT_NEAR(x.p(0), 0.0, 1e-15);
  const PhasePoint y = inverse_map(*standard_family(1.0), v1(0.5), v1(0.0));
  EXPECT_NEAR(y.q(0), 0.5, 1e-15);
  EXPECT_NEAR(y.p(0), 0.0, 1e-15);
}

TEST(ForwardMap, MatchesClosedFormStandardMap) {
  Gen gen(2);
  for (double k : {0.5, 1.0, 3.0}) {
    const auto gf = standard_family(k);
    for (int i = 0; i < 100; ++i) {
      const double q = gen.uniform(-1, 2), p = gen.uniform(-2, 2);
      const PhasePoint x = forward_map(*gf, v1(q), v1(p));
      const PhasePoint y = chirikov(k, q, p);
      EXPECT_NEAR(x.q(0), y.q(0), 1e-12);
      EXPECT_NEAR(x.p(0), y.p(0), 1e-12);
    }
  }
}

TEST(InverseMap, RoundTrip) {
  Gen gen(3);
  const auto gf = standard_family(1.0);
  for (int i = 0; i < 100; ++i) {
    const Vector q = v1(gen.uniform(-1, 2)), p = v1(gen.uniform(-2, 2));
    const PhasePoint back = inverse_map(*gf, q, p);
    const PhasePoint again = forward_map(*gf, back.q, back.p);
    EXPECT_LE((again.q - q).norm() + (again.p - p).norm(), 1e-10);
  }
  const PhasePoint shear = inverse_map(*standard_family(0.0), v1(1.0), v1(0.25));
  EXPECT_NEAR(shear.q(0), 0.75, 1e-14);
  EXPECT_NEAR(shear.p(0), 0.25, 1e-14);
}

TEST(ForwardMap, DefectiveFunctionDiverges) {
  BoundedTwist gf;
  try {
    forward_map(gf, v1(0.0), v1(10.0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    // Phi_12 decays along the Newton path, so either diagnosis is acceptable.
    EXPECT_TRUE(e.code() == ErrorCode::kNewtonDivergence || e.code() == ErrorCode::kSingularTwist)
        << to_string(e.code());
  }
}

TEST(TangentMap, Examples) {
  const Matrix shear = tangent_map(*standard_family(0.0), v1(0.2), v1(0.7)).full();
  Matrix expect(2, 2);
  expect << 1, 1, 0, 1;
  EXPECT_LE((shear - expect).cwiseAbs().maxCoeff(), 1e-15);

  const Matrix fixed = tangent_map(*standard_family(1.0), v1(0.5), v1(0.5)).full();
  expect << 2, 1, 1, 1;
  EXPECT_LE((fixed - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(fixed.trace(), 3.0, 1e-15);
  EXPECT_NEAR(fixed.determinant(), 1.0, 1e-14);
}

TEST(TangentMap, MatchesFiniteDifferenceJacobian) {
  Gen gen(4);
  const auto gf = standard_family(1.3);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Vector q = v1(gen.uniform(0, 1)), p = v1(gen.uniform(-1, 1));
    const PhasePoint x = forward_map(*gf, q, p);
    const Matrix df = tangent_map(*gf, q, x.q).full();
    Matrix fd(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vector dq = Vector::Zero(1), dp = Vector::Zero(1);
      (j == 0 ? dq : dp)(0) = h;
      const PhasePoint a = forward_map(*gf, q + dq, p + dp), b = forward_map(*gf, q - dq, p - dp);
      fd(0, j) = (a.q(0) - b.q(0)) / (2 * h);
      fd(1, j) = (a.p(0) - b.p(0)) / (2 * h);
    }
    EXPECT_LE((df - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(TangentMap, SymplecticAlongOrbits) {
  Gen gen(5);
  const auto gf = std::make_shared<TrigTwistFamily>(
      TrigPolynomial(2, {{{1, 0}, 0.04, 0.0}, {{0, 1}, 0.03, 0.0}, {{1, 1}, 0.01, 0.3}}));
  const OrbitSegment orbit = iterate_orbit(gf, {gen.vector(2), gen.vector(2, 0.3)}, 200);
  for (long n = orbit.first(); n < orbit.last(); ++n) {
    EXPECT_TRUE(symgeo::check_symplectic(tangent_map(*gf, orbit.q(n), orbit.q(n + 1))));
  }
}

TEST(OrbitSegment, MomentumConsistencyOverLongOrbit) {
  Gen gen(6);
  for (double k : {0.7, 1.0, 2.5}) {
    const auto orbit = iterate_orbit(standard_family(k), {v1(gen.uniform()), v1(gen.uniform(-0.5, 0.5))}, 10000);
    EXPECT_EQ(orbit.size(), 10001u);
    EXPECT_LE(orbit.momentum_consistency(), 1e-8);
  }
}

TEST(OrbitSegment, JacobiCoefficients) {
  const OrbitSegment fixed(standard_family(1.0), constant_configs(0.5, 5));
  EXPECT_NEAR(fixed.a(2)(0, 0), 3.0, 1e-15);
  EXPECT_NEAR(fixed.b(2)(0, 0), -1.0, 1e-15);
}

TEST(Jacobi, Examples) {
  const OrbitSegment fixed(standard_family(1.0), constant_configs(0.5, 5));
  EXPECT_EQ(jacobi_propagate(fixed, 2, v1(0), v1(0))(0), 0.0);
  const double lambda = (3.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(jacobi_propagate(fixed, 2, v1(1.0), v1(lambda))(0), lambda * lambda, 1e-13);
}

TEST(Jacobi, EqualsProjectedCocycle) {
  Gen gen(7);
  const auto gf = standard_family(1.0);
  const auto orbit = find_minimizing_periodic_orbit(gf, v1(2), 5);
  const auto configs = orbit.config.unrolled(0, 102);
  const OrbitSegment seg(gf, configs);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(2);
    x << gen.normal(), gen.normal();
    std::vector<double> zeta{x(0)};
    Vector y = x;
    for (long n = 0; n < 101; ++n) {
      y = tangent_map(*gf, seg.q(n), seg.q(n + 1)).full() * y;
      zeta.push_back(y(0));
    }
    Vector prev = v1(zeta[0]), cur = v1(zeta[1]);
    for (long n = 1; n < 100; ++n) {
      const Vector next = jacobi_propagate(seg, n, prev, cur);
      EXPECT_LE(std::abs(next(0) - zeta[n + 1]) / std::max(1.0, std::abs(zeta[n + 1])), 1e-9);
      prev = cur;
      cur = next;
    }
  }
}

TEST(Action, ResidualExamples) {
  const auto gf0 = standard_family(0.0);
  std::vector<Vector> rot;
  for (int n = 0; n < 8; ++n) rot.push_back(v1(0.1 + 0.37 * n));
  EXPECT_LE(euler_lagrange_residual(*gf0, rot).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(euler_lagrange_residual(*standard_family(1.0), constant_configs(0.5, 6)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Action, ResidualIsGradientOfAction) {
  Gen gen(8);
  const auto gf = std::make_shared<TrigTwistFamily>(TrigPolynomial(2, {{{1, 0}, 0.05, 0.0}, {{1, 1}, 0.02, 0.5}}));
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vector> c;
    for (int n = 0; n < 6; ++n) c.push_back(gen.vector(2));
    const Matrix r = euler_lagrange_residual(*gf, c);
    ASSERT_EQ(r.cols(), 4);
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 2; ++i) {
        auto plus = c, minus = c;
        plus[j + 1](i) += h;
        minus[j + 1](i) -= h;
        const double fd = (action(*gf, plus) - action(*gf, minus)) / (2 * h);
        EXPECT_NEAR(r(i, j), fd, 1e-6 * (1.0 + std::abs(fd)));
      }
    }
  }
}

TEST(Hessian, HyperbolicFixedConfigurationIsPositiveDefinite) {
  const OrbitSegment seg(standard_family(1.0), constant_configs(0.5, 40));
  const BlockTridiagonal h = hessian(seg);
  ASSERT_EQ(h.blocks(), 38u);
  EXPECT_NEAR(h.diag[0](0, 0), 3.0, 1e-15);
  EXPECT_NEAR(h.upper[0](0, 0), -1.0, 1e-15);
  EXPECT_TRUE(is_positive_definite(h));
}

TEST(Hessian, EllipticFixedConfigurationFails) {
  // Diagonal 1, off-diagonal -1: eigenvalues 1 - 2 cos(k pi / (n + 1)); only n = 1 is PD.
  const OrbitSegment seg(standard_family(1.0), constant_configs(0.0, 40));
  const BlockTridiagonal h = hessian(seg);
  EXPECT_FALSE(is_positive_definite(h));
  EXPECT_EQ(positive_definite_prefix(h), 1u);
}

TEST(Hessian, PrefixAgreesWithDenseEigenvalues) {
  Gen gen(9);
  for (int trial = 0; trial < 30; ++trial) {
    const double k = gen.uniform(0.0, 3.0);
    const double q = gen.uniform(0, 1);
    const OrbitSegment seg(standard_family(k), constant_configs(q, 12));
    const BlockTridiagonal h = hessian(seg);
    const Matrix dense = h.dense();
    std::size_t expect = 0;
    for (Eigen::Index n = 1; n <= dense.rows(); ++n) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(dense.topLeftCorner(n, n));
      if (es.eigenvalues()(0) <= 1e-6) break;
      expect = static_cast<std::size_t>(n);
    }
    EXPECT_EQ(positive_definite_prefix(h), expect) << "K=" << k << " q=" << q;
  }
}

TEST(Hessian, NoInteriorIsVacuouslyPositive) {
  const OrbitSegment seg(standard_family(1.0), constant_configs(0.0, 2));
  EXPECT_EQ(hessian(seg).blocks(), 0u);
  EXPECT_TRUE(is_positive_definite(hessian(seg)));
}

TEST(Minimize, FixedPointOfStandardMap) {
  const auto r = find_minimizing_periodic_orbit(standard_family(1.0), v1(0), 1);
  EXPECT_NEAR(r.config.points[0](0), 0.5, 1e-12);
  EXPECT_TRUE(r.certificate.certified);
}

TEST(Minimize, IntegrableCaseIsExactRotation) {
  const auto r = find_minimizing_periodic_orbit(standard_family(0.0), v1(2), 5);
  ASSERT_TRUE(r.certificate.certified);
  EXPECT_EQ(r.certificate.kernel_dim, 1);
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(r.config.point(n + 1)(0) - r.config.point(n)(0), 0.4, 1e-12);
  // N * |m / N|^2 / 2 with V = 0.
  EXPECT_NEAR(r.action, 5 * 0.5 * 0.16, 1e-12);
}

TEST(Minimize, PeriodTwoOrbitIsCertified) {
  const auto r = find_minimizing_periodic_orbit(standard_family(1.0), v1(1), 2);
  EXPECT_TRUE(r.certificate.certified);
  EXPECT_LE(r.certificate.residual, kCertifyResidual);
  EXPECT_LE(periodic_residual(*standard_family(1.0), r.config).cwiseAbs().maxCoeff(), 1e-10);
  // Cross-check the gradient against finite differences of the periodic action.
  const double h = 1e-6;
  auto shifted = r.config;
  shifted.points[0](0) += h;
  const double up = periodic_action(*standard_family(1.0), shifted);
  shifted.points[0](0) -= 2 * h;
  const double down = periodic_action(*standard_family(1.0), shifted);
  EXPECT_NEAR((up - down) / (2 * h), 0.0, 1e-6);
}

TEST(Minimize, CertifiedSegmentsArePositiveDefinite) {
  const auto gf = standard_family(2.0);
  for (auto [m, n] : {std::pair{1, 3}, {2, 5}, {3, 7}}) {
    const auto r = find_minimizing_periodic_orbit(gf, v1(m), n);
    ASSERT_TRUE(r.certificate.certified);
    const OrbitSegment seg(gf, r.config.unrolled(-2 * n, 5 * n));
    EXPECT_TRUE(is_positive_definite(hessian(seg)));
  }
}

TEST(Certify, EllipticConfigurationIsRejected) {
  const auto c = make_periodic(v1(0), {v1(0.0)});
  const Certificate cert = certify(standard_family(1.0), c);
  EXPECT_FALSE(cert.certified);
  EXPECT_LT(cert.min_eigenvalue, 0.0);
}

TEST(PeriodicConfiguration, BoundaryConvention) {
  const auto c = make_periodic(v1(3), {v1(0.1), v1(0.6)});
  EXPECT_EQ(c.point(2)(0), 3.1);
  EXPECT_EQ(c.point(-1)(0), 0.6 - 3.0);
  EXPECT_THROW(make_periodic(v1(0.5), {v1(0.0)}), Error);
}

}  // namespace
