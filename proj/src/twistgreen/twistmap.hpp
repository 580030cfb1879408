#pragma once

// Symplectic twist maps of T^d x R^d given by a generating function Phi(q, Q):
//   p = -Phi_1(q, Q),  P = Phi_2(q, Q).
// Orbits are kept in the universal cover R^d x R^d.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twistgreen/symgeo.hpp"
#include "twistgreen/trig_polynomial.hpp"

namespace twistgreen::twistmap {

using symgeo::SymMat;
using symgeo::SympBlockMat;

class GeneratingFunction {
 public:
  virtual ~GeneratingFunction() = default;

  virtual int dim() const = 0;
  virtual double value(const Vector& q, const Vector& qn) const = 0;
  virtual Vector d1(const Vector& q, const Vector& qn) const = 0;
  virtual Vector d2(const Vector& q, const Vector& qn) const = 0;
  virtual Matrix d11(const Vector& q, const Vector& qn) const = 0;
  virtual Matrix d12(const Vector& q, const Vector& qn) const = 0;
  virtual Matrix d22(const Vector& q, const Vector& qn) const = 0;
  /// K > 0 with zeta . Phi_12 zeta <= -K |zeta|^2.
  virtual double twist_constant() const = 0;
};

/// Phi(q, Q) = |Q - q|^2 / 2 + V(q) with V a trigonometric polynomial.
/// d = 1 with V = (K / 4 pi^2) cos(2 pi q) is the standard (Chirikov) map.
class TrigTwistFamily final : public GeneratingFunction {
 public:
  explicit TrigTwistFamily(TrigPolynomial potential);

  int dim() const override { return potential_.dim(); }
  double value(const Vector& q, const Vector& qn) const override;
  Vector d1(const Vector& q, const Vector& qn) const override;
  Vector d2(const Vector& q, const Vector& qn) const override;
  Matrix d11(const Vector& q, const Vector& qn) const override;
  Matrix d12(const Vector& q, const Vector& qn) const override;
  Matrix d22(const Vector& q, const Vector& qn) const override;
  double twist_constant() const override { return 1.0; }

  const TrigPolynomial& potential() const { return potential_; }

 private:
  TrigPolynomial potential_;
};

std::shared_ptr<const TrigTwistFamily> standard_family(double k);

struct GeneratingFunctionCheck {
  double periodicity_error = 0.0;
  double worst_twist = 0.0;  // max of zeta.Phi_12.zeta / |zeta|^2, must be <= -K
  double symmetry_error = 0.0;
  double derivative_error = 0.0;  // relative finite-difference mismatch
  bool ok = false;
};

/// Spot-checks the GeneratingFunction contract on random samples.
GeneratingFunctionCheck validate_generating_function(const GeneratingFunction& gf,
                                                     std::uint64_t seed, int samples = 32);

struct PhasePoint {
  Vector q;
  Vector p;
};

/// (q, p) -> (Q, P). Damped Newton on Phi_1(q, Q) = -p. Throws NewtonDivergence.
PhasePoint forward_map(const GeneratingFunction& gf, const Vector& q, const Vector& p);
/// (Q, P) -> (q, p). Damped Newton on Phi_2(q, Q) = P. Throws NewtonDivergence.
PhasePoint inverse_map(const GeneratingFunction& gf, const Vector& qn, const Vector& pn);

/// Df at the point with consecutive configurations (q, Q):
/// [[-b^-1 Phi_11, -b^-1], [b^T - Phi_22 b^-1 Phi_11, -Phi_22 b^-1]], b = Phi_12.
SympBlockMat tangent_map(const GeneratingFunction& gf, const Vector& q, const Vector& qn);

/// A finite lifted orbit q_M..q_N with momenta and cached Jacobi coefficients
///   a_n = Phi_11(q_n, q_{n+1}) + Phi_22(q_{n-1}, q_n),  b_n = Phi_12(q_n, q_{n+1}).
class OrbitSegment {
 public:
  /// Momenta default to p_n = -Phi_1(q_n, q_{n+1}) and p_N = Phi_2(q_{N-1}, q_N).
  OrbitSegment(std::shared_ptr<const GeneratingFunction> gf, std::vector<Vector> configs,
               long first_index = 0, std::vector<Vector> momenta = {});

  const GeneratingFunction& gf() const { return *gf_; }
  std::shared_ptr<const GeneratingFunction> gf_ptr() const { return gf_; }
  int dim() const { return gf_->dim(); }
  long first() const { return first_; }
  long last() const { return first_ + static_cast<long>(q_.size()) - 1; }
  std::size_t size() const { return q_.size(); }

  const Vector& q(long n) const { return q_.at(static_cast<std::size_t>(n - first_)); }
  const Vector& p(long n) const { return p_.at(static_cast<std::size_t>(n - first_)); }
  /// Defined for first() < n < last().
  const Matrix& a(long n) const;
  /// Defined for first() <= n < last().
  const Matrix& b(long n) const;

  /// Largest of |p_n - Phi_2(q_{n-1}, q_n)| and |p_n + Phi_1(q_n, q_{n+1})|.
  double momentum_consistency() const;

 private:
  std::shared_ptr<const GeneratingFunction> gf_;
  long first_;
  std::vector<Vector> q_, p_;
  std::vector<Matrix> a_, b_;
};

/// Orbit of (q0, p0) under `steps` applications of forward_map.
OrbitSegment iterate_orbit(std::shared_ptr<const GeneratingFunction> gf, const PhasePoint& x0,
                           long steps, long first_index = 0);

/// zeta_{n+1} = -b_n^-1 (b_{n-1}^T zeta_{n-1} + a_n zeta_n).
Vector jacobi_propagate(const OrbitSegment& orbit, long n, const Vector& zeta_prev,
                        const Vector& zeta_n);

/// sum_n Phi(q_n, q_{n+1}).
double action(const GeneratingFunction& gf, std::span<const Vector> configs);
/// Column j holds Phi_2(q_j, q_{j+1}) + Phi_1(q_{j+1}, q_{j+2}) for interior q_{j+1}.
Matrix euler_lagrange_residual(const GeneratingFunction& gf, std::span<const Vector> configs);

/// Symmetric block-tridiagonal matrix: diag[i] at (i, i), upper[i] at (i, i+1).
struct BlockTridiagonal {
  std::vector<Matrix> diag;
  std::vector<Matrix> upper;

  std::size_t blocks() const { return diag.size(); }
  Matrix dense() const;
};

/// Hessian of the action with the endpoints q_M and q_N held fixed.
BlockTridiagonal hessian(const OrbitSegment& orbit);
/// Number of leading principal block minors that are positive definite, by the
/// block Cholesky sweep D_1 = A_1, D_{i+1} = A_{i+1} - B_i^T D_i^-1 B_i.
std::size_t positive_definite_prefix(const BlockTridiagonal& h);
inline bool is_positive_definite(const BlockTridiagonal& h) {
  return positive_definite_prefix(h) == h.blocks();
}

/// q_0..q_{N-1} with q_{n+N} = q_n + m.
struct PeriodicConfiguration {
  int period = 0;
  Vector rotation;  // integer entries
  std::vector<Vector> points;

  int dim() const { return static_cast<int>(rotation.size()); }
  /// Lifted q_n for any integer n.
  Vector point(long n) const;
  /// q_first .. q_{first+count-1}.
  std::vector<Vector> unrolled(long first, long count) const;
};

PeriodicConfiguration make_periodic(const Vector& rotation, std::vector<Vector> points);

double periodic_action(const GeneratingFunction& gf, const PeriodicConfiguration& c);
/// Gradient of the periodic action, one column per point.
Matrix periodic_residual(const GeneratingFunction& gf, const PeriodicConfiguration& c);
/// Dense Nd x Nd Hessian of the periodic action (block tridiagonal with corners).
Matrix periodic_hessian(const GeneratingFunction& gf, const PeriodicConfiguration& c);

struct Certificate {
  double residual = 0.0;        // max-norm of the periodic gradient
  double min_eigenvalue = 0.0;  // of the periodic Hessian
  int kernel_dim = 0;           // eigenvalues within tolerance of zero
  bool semidefinite = false;
  long segment_points = 0;      // interior points of the unrolled check segment
  bool segment_positive_definite = false;
  bool certified = false;
  std::string reason;
};

inline constexpr double kCertifyResidual = 1e-10;

/// Second-order local minimality certificate: residual, periodic Hessian PSD,
/// and a PD fixed-endpoint Hessian over `periods` unrolled periods.
Certificate certify(std::shared_ptr<const GeneratingFunction> gf, const PeriodicConfiguration& c,
                    int periods = 3);

struct MinimizeOptions {
  int max_iterations = 5000;
  int newton_iterations = 30;
  int certify_periods = 3;
};

struct MinimizeResult {
  PeriodicConfiguration config;
  Certificate certificate;
  double action = 0.0;
  int iterations = 0;
  std::string termination;
};

/// L-BFGS on the periodic action followed by Newton polishing and the mandatory
/// certification step. Tries a few phase offsets when no `init` is given.
/// Throws PartialResultError<MinimizeResult> with NonConvergence or
/// SaddleDetected; the payload is the best iterate.
MinimizeResult find_minimizing_periodic_orbit(std::shared_ptr<const GeneratingFunction> gf,
                                              const Vector& rotation, int period,
                                              const std::optional<std::vector<Vector>>& init = {},
                                              const MinimizeOptions& opts = {});

}  // namespace twistgreen::twistmap
