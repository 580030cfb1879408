#pragma once

// Tonelli Hamiltonian flows on T*T^d = T^d x R^d (lifted): flow and
// variational integration, Green bundles by frame transport, and the
// exponent formulas built on them.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "twistgreen/symgeo.hpp"
#include "twistgreen/trig_polynomial.hpp"

namespace twistgreen::tonelli {

using symgeo::SymMat;

class TonelliHamiltonian {
 public:
  virtual ~TonelliHamiltonian() = default;

  virtual int dim() const = 0;
  virtual double value(const Vector& q, const Vector& p) const = 0;
  virtual Vector dq(const Vector& q, const Vector& p) const = 0;
  virtual Vector dp(const Vector& q, const Vector& p) const = 0;
  virtual Matrix hpp(const Vector& q, const Vector& p) const = 0;
  /// (H_qp)_{ij} = d^2 H / dq_i dp_j.
  virtual Matrix hqp(const Vector& q, const Vector& p) const = 0;
  virtual Matrix hqq(const Vector& q, const Vector& p) const = 0;

  /// Non-null when H = |p|^2 / 2 + V(q); enables the splitting integrator.
  virtual const TrigPolynomial* mechanical_potential() const { return nullptr; }
};

/// H = |p|^2 / 2 + V(q).
class MechanicalHamiltonian final : public TonelliHamiltonian {
 public:
  explicit MechanicalHamiltonian(TrigPolynomial v);

  int dim() const override { return v_.dim(); }
  double value(const Vector& q, const Vector& p) const override;
  Vector dq(const Vector& q, const Vector& p) const override;
  Vector dp(const Vector& q, const Vector& p) const override;
  Matrix hpp(const Vector& q, const Vector& p) const override;
  Matrix hqp(const Vector& q, const Vector& p) const override;
  Matrix hqq(const Vector& q, const Vector& p) const override;
  const TrigPolynomial* mechanical_potential() const override { return &v_; }

 private:
  TrigPolynomial v_;
};

/// H = |p - A(q)|^2 / 2 + V(q) with each A_j a trigonometric polynomial.
/// Has H_qp != 0.
class GaugeHamiltonian final : public TonelliHamiltonian {
 public:
  GaugeHamiltonian(std::vector<TrigPolynomial> a, TrigPolynomial v);

  int dim() const override { return v_.dim(); }
  double value(const Vector& q, const Vector& p) const override;
  Vector dq(const Vector& q, const Vector& p) const override;
  Vector dp(const Vector& q, const Vector& p) const override;
  Matrix hpp(const Vector& q, const Vector& p) const override;
  Matrix hqp(const Vector& q, const Vector& p) const override;
  Matrix hqq(const Vector& q, const Vector& p) const override;

 private:
  Vector a_value(const Vector& q) const;
  Matrix a_jacobian(const Vector& q) const;  // (i, j) = dA_i / dq_j

  std::vector<TrigPolynomial> a_;
  TrigPolynomial v_;
};

/// H = p^2 / 2 + (c^2 / 4 pi^2) cos(2 pi q); the equilibrium q = 0 has exponents +-c.
std::shared_ptr<const MechanicalHamiltonian> pendulum(double c = 1.0);
/// H = |p|^2 / 2 on T^d.
std::shared_ptr<const MechanicalHamiltonian> flat(int d);

struct HamiltonianCheck {
  double derivative_error = 0.0;  // relative finite-difference mismatch
  double min_hpp_eigenvalue = 0.0;
  double symmetry_error = 0.0;
  bool ok = false;
};

/// Spot-checks the evaluation contract and fiber convexity on random samples.
HamiltonianCheck validate_hamiltonian(const TonelliHamiltonian& h, std::uint64_t seed, int samples = 32);

enum class Integrator { kAdaptive, kSplitting };

struct FlowOptions {
  Integrator integrator = Integrator::kAdaptive;
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double splitting_dt = 1e-3;
};

struct FlowState {
  Vector q;
  Vector p;
  double t = 0.0;
};

/// 2d x k frame of tangent vectors (dq rows first, then dp rows).
using VariationalFrame = Matrix;

/// Integrates the flow over [s.t, s.t + dt]; dt may be negative. Throws StepSizeUnderflow.
FlowState flow_step(const TonelliHamiltonian& h, const FlowState& s, double dt, const FlowOptions& opts = {});

/// Integrates the flow together with the linearized equations
///   dq' = H_pq dq + H_pp dp,  dp' = -H_qq dq - H_qp dp.
std::pair<FlowState, VariationalFrame> variational_step(const TonelliHamiltonian& h, const FlowState& s,
                                                        const VariationalFrame& f, double dt,
                                                        const FlowOptions& opts = {});

/// Transports the frame over dt in chunks of at most `renorm` time units,
/// re-orthonormalizing in between. The span is what is transported.
std::pair<FlowState, VariationalFrame> transport_span(const TonelliHamiltonian& h, const FlowState& s,
                                                      const VariationalFrame& f, double dt, double renorm,
                                                      const FlowOptions& opts = {});

struct GreenFlowPoint {
  SymMat s;  // G-
  SymMat u;  // G+
  double estimate = 0.0;  // |U_T - U_{T/2}| + |S_T - S_{T/2}|
  double orbit_mismatch = 0.0;
};

/// U from the vertical at phi_{-T}(x) pushed forward, S from the vertical at
/// phi_T(x) pulled back. Throws ConjugatePoint, and PartialResultError
/// (NonConvergence) when estimate > tol.
GreenFlowPoint compute_green_bundles_flow(const TonelliHamiltonian& h, const FlowState& x, double t_warm,
                                          double tol, const FlowOptions& opts = {});

/// Slopes of D phi_t V(phi_{-t} x) (upper) and D phi_{-t} V(phi_t x) (lower).
std::pair<SymMat, SymMat> finite_time_green(const TonelliHamiltonian& h, const FlowState& x, double t,
                                            const FlowOptions& opts = {});

struct GreenFlowSample {
  double t = 0.0;
  FlowState x;
  SymMat s, u;
  /// Orthonormal frame of G+. exp(u_log_scale) * u_frame.col(0) is one and the
  /// same infinitesimal orbit at every sample of the path.
  VariationalFrame u_frame;
  double u_log_scale = 0.0;
};

struct GreenFlowPath {
  std::vector<GreenFlowSample> samples;
  double dt = 0.0;  // sample spacing
  double orbit_mismatch = 0.0;
};

/// Green bundles sampled at t = 0, dt, ..., window along the orbit of x0,
/// with t_warm time units of transport before and after the window.
GreenFlowPath green_bundles_along_orbit(const TonelliHamiltonian& h, const FlowState& x0, double window,
                                        int samples, double t_warm, const FlowOptions& opts = {});

/// Norm of G' + G H_pp G + G H_pq + H_qp G + H_qq at interior samples; G'
/// by 5-point central differences. `use_upper` selects U over S.
std::vector<double> riccati_residual(const TonelliHamiltonian& h, const GreenFlowPath& path, bool use_upper);

struct WronskianRow {
  double t = 0.0;
  double fd_derivative = 0.0;  // d/dt omega(dx_S, dx_U) by finite differences
  double quadratic = 0.0;      // (dx_U - dx_S) . H_pp . (dx_U - dx_S)
};

/// dx_U is the infinitesimal orbit carried by the first frame column, rescaled
/// to unit length at each reported time; dx_S = (dq_U, S dq_U).
std::vector<WronskianRow> lemma9_check(const TonelliHamiltonian& h, const GreenFlowPath& path);

/// 1/2 sum w tr(H_pp (U - S)). Empty weights mean uniform.
double theorem1_sum(const TonelliHamiltonian& h, const GreenFlowPath& path, std::span<const double> weights = {});

struct FlowLowerBound {
  double bound = 0.0;          // 1/2 sum w m(H_pp) q+(U - S)
  double bound_qplus_hpp = 0.0;  // same with q+(H_pp); equal since H_pp > 0
};

/// zero_tol < 0 selects the default eigenvalue threshold. Throws NoPositiveEigenvalue.
FlowLowerBound theorem3_bound(const TonelliHamiltonian& h, const GreenFlowPath& path,
                              std::span<const double> weights = {}, double zero_tol = -1.0);

}  // namespace twistgreen::tonelli
