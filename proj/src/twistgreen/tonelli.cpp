#include "twistgreen/tonelli.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "twistgreen/errors.hpp"

namespace twistgreen::tonelli {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

void require_state(const TonelliHamiltonian& h, const FlowState& s) {
  if (s.q.size() != h.dim() || s.p.size() != h.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "flow state dimension differs from the Hamiltonian");
  }
}

Vector slice(const State& x, int off, int n) {
  return Eigen::Map<const Vector>(x.data() + off, n);
}

// Phase point followed by the frame, column-major.
struct VariationalSystem {
  const TonelliHamiltonian& h;
  int d;
  int k;

  void operator()(const State& x, State& dxdt, double /*t*/) const {
    const Vector q = slice(x, 0, d), p = slice(x, d, d);
    Eigen::Map<Vector>(dxdt.data(), d) = h.dp(q, p);
    Eigen::Map<Vector>(dxdt.data() + d, d) = -h.dq(q, p);
    if (k == 0) return;
    const Matrix hpp = h.hpp(q, p), hqp = h.hqp(q, p), hqq = h.hqq(q, p);
    Eigen::Map<const Matrix> f(x.data() + 2 * d, 2 * d, k);
    Eigen::Map<Matrix> df(dxdt.data() + 2 * d, 2 * d, k);
    df.topRows(d) = hqp.transpose() * f.topRows(d) + hpp * f.bottomRows(d);
    df.bottomRows(d) = -hqq * f.topRows(d) - hqp * f.bottomRows(d);
  }
};

// Coordinates (q, dq) and momenta (p, dp) for H = |p|^2/2 + V(q): q' = p, p' = -grad V.
struct MechanicalForce {
  const TrigPolynomial& v;
  int d;
  int k;

  void operator()(const State& c, State& dpdt) const {
    const Vector q = slice(c, 0, d);
    Eigen::Map<Vector>(dpdt.data(), d) = -v.gradient(q);
    if (k == 0) return;
    const Matrix hess = v.hessian(q);
    Eigen::Map<const Matrix> fq(c.data() + d, d, k);
    Eigen::Map<Matrix>(dpdt.data() + d, d, k) = -hess * fq;
  }
};

std::pair<FlowState, VariationalFrame> integrate(const TonelliHamiltonian& h, const FlowState& s,
                                                 const VariationalFrame& f, double dt, const FlowOptions& opts) {
  require_state(h, s);
  const int d = h.dim();
  const int k = static_cast<int>(f.cols());
  if (k > 0 && f.rows() != 2 * d) throw Error(ErrorCode::kDimensionMismatch, "frame must have 2d rows");
  if (!std::isfinite(dt)) throw Error(ErrorCode::kInvalidArgument, "non-finite time step");
  if (dt == 0.0) return {s, f};

  FlowState out;
  out.t = s.t + dt;
  VariationalFrame fout(2 * d, k);
  try {
    const TrigPolynomial* v = h.mechanical_potential();
    if (opts.integrator == Integrator::kSplitting) {
      if (v == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "splitting integrator needs a mechanical Hamiltonian");
      }
      if (!(opts.splitting_dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "splitting_dt must be > 0");
      State c(static_cast<std::size_t>(d * (k + 1))), m(c.size());
      Eigen::Map<Vector>(c.data(), d) = s.q;
      Eigen::Map<Vector>(m.data(), d) = s.p;
      if (k > 0) {
        Eigen::Map<Matrix>(c.data() + d, d, k) = f.topRows(d);
        Eigen::Map<Matrix>(m.data() + d, d, k) = f.bottomRows(d);
      }
      const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(dt) / opts.splitting_dt)));
      const double step = dt / static_cast<double>(n);
      odeint::symplectic_rkn_sb3a_mclachlan<State> stepper;
      MechanicalForce force{*v, d, k};
      double t = s.t;
      for (long i = 0; i < n; ++i) {
        stepper.do_step(force, std::make_pair(std::ref(c), std::ref(m)), t, step);
        t += step;
      }
      out.q = slice(c, 0, d);
      out.p = slice(m, 0, d);
      if (k > 0) {
        fout.topRows(d) = Eigen::Map<const Matrix>(c.data() + d, d, k);
        fout.bottomRows(d) = Eigen::Map<const Matrix>(m.data() + d, d, k);
      }
    } else {
      State x(static_cast<std::size_t>(2 * d + 2 * d * k));
      Eigen::Map<Vector>(x.data(), d) = s.q;
      Eigen::Map<Vector>(x.data() + d, d) = s.p;
      if (k > 0) Eigen::Map<Matrix>(x.data() + 2 * d, 2 * d, k) = f;
      auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol,
                                             odeint::runge_kutta_fehlberg78<State>());
      const double dt0 = std::copysign(std::min(std::abs(dt), 1e-2), dt);
      odeint::integrate_adaptive(stepper, VariationalSystem{h, d, k}, x, s.t, s.t + dt, dt0);
      out.q = slice(x, 0, d);
      out.p = slice(x, d, d);
      if (k > 0) fout = Eigen::Map<const Matrix>(x.data() + 2 * d, 2 * d, k);
    }
  } catch (const odeint::odeint_error& e) {
    throw Error(ErrorCode::kStepSizeUnderflow, e.what());
  }
  if (!out.q.allFinite() || !out.p.allFinite() || !fout.allFinite()) {
    throw Error(ErrorCode::kStepSizeUnderflow, "integration produced non-finite values");
  }
  return {std::move(out), std::move(fout)};
}

}  // namespace

MechanicalHamiltonian::MechanicalHamiltonian(TrigPolynomial v) : v_(std::move(v)) {}

double MechanicalHamiltonian::value(const Vector& q, const Vector& p) const {
  return 0.5 * p.squaredNorm() + v_.value(q);
}
Vector MechanicalHamiltonian::dq(const Vector& q, const Vector&) const { return v_.gradient(q); }
Vector MechanicalHamiltonian::dp(const Vector&, const Vector& p) const { return p; }
Matrix MechanicalHamiltonian::hpp(const Vector&, const Vector&) const { return Matrix::Identity(dim(), dim()); }
Matrix MechanicalHamiltonian::hqp(const Vector&, const Vector&) const { return Matrix::Zero(dim(), dim()); }
Matrix MechanicalHamiltonian::hqq(const Vector& q, const Vector&) const { return v_.hessian(q); }

GaugeHamiltonian::GaugeHamiltonian(std::vector<TrigPolynomial> a, TrigPolynomial v)
    : a_(std::move(a)), v_(std::move(v)) {
  if (static_cast<int>(a_.size()) != v_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "gauge field needs one component per dimension");
  }
  for (const auto& c : a_) {
    if (c.dim() != v_.dim()) throw Error(ErrorCode::kDimensionMismatch, "gauge component dimension");
  }
}

Vector GaugeHamiltonian::a_value(const Vector& q) const {
  Vector a(dim());
  for (int i = 0; i < dim(); ++i) a(i) = a_[static_cast<std::size_t>(i)].value(q);
  return a;
}

Matrix GaugeHamiltonian::a_jacobian(const Vector& q) const {
  Matrix j(dim(), dim());
  for (int i = 0; i < dim(); ++i) j.row(i) = a_[static_cast<std::size_t>(i)].gradient(q).transpose();
  return j;
}

double GaugeHamiltonian::value(const Vector& q, const Vector& p) const {
  return 0.5 * (p - a_value(q)).squaredNorm() + v_.value(q);
}

Vector GaugeHamiltonian::dq(const Vector& q, const Vector& p) const {
  return -a_jacobian(q).transpose() * (p - a_value(q)) + v_.gradient(q);
}

Vector GaugeHamiltonian::dp(const Vector& q, const Vector& p) const { return p - a_value(q); }

Matrix GaugeHamiltonian::hpp(const Vector&, const Vector&) const { return Matrix::Identity(dim(), dim()); }

Matrix GaugeHamiltonian::hqp(const Vector& q, const Vector&) const {
  // d/dq_i (p_j - A_j) = -dA_j/dq_i.
  return -a_jacobian(q).transpose();
}

Matrix GaugeHamiltonian::hqq(const Vector& q, const Vector& p) const {
  const Matrix j = a_jacobian(q);
  const Vector w = p - a_value(q);
  Matrix out = j.transpose() * j + v_.hessian(q);
  for (int c = 0; c < dim(); ++c) out -= w(c) * a_[static_cast<std::size_t>(c)].hessian(q);
  return out;
}

std::shared_ptr<const MechanicalHamiltonian> pendulum(double c) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::make_shared<const MechanicalHamiltonian>(
      TrigPolynomial(1, {TrigTerm{{1}, c * c / (two_pi * two_pi), 0.0}}));
}

std::shared_ptr<const MechanicalHamiltonian> flat(int d) {
  return std::make_shared<const MechanicalHamiltonian>(TrigPolynomial(d, {}));
}

HamiltonianCheck validate_hamiltonian(const TonelliHamiltonian& h, std::uint64_t seed, int samples) {
  const int d = h.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto rand_vec = [&] {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = u(rng);
    return v;
  };
  auto rel = [](const auto& fd, const auto& exact) {
    return (fd - exact).cwiseAbs().maxCoeff() / (1.0 + exact.cwiseAbs().maxCoeff());
  };
  constexpr double eps = 1e-5;
  HamiltonianCheck out;
  out.min_hpp_eigenvalue = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vector q = rand_vec(), p = rand_vec();
    Vector gq(d), gp(d);
    Matrix fpp(d, d), fqp(d, d), fqq(d, d);
    for (int i = 0; i < d; ++i) {
      Vector e = Vector::Zero(d);
      e(i) = eps;
      gq(i) = (h.value(q + e, p) - h.value(q - e, p)) / (2 * eps);
      gp(i) = (h.value(q, p + e) - h.value(q, p - e)) / (2 * eps);
      // Row i of H_qp is d/dq_i of grad_p H.
      fqp.row(i) = ((h.dp(q + e, p) - h.dp(q - e, p)) / (2 * eps)).transpose();
      fqq.col(i) = (h.dq(q + e, p) - h.dq(q - e, p)) / (2 * eps);
      fpp.col(i) = (h.dp(q, p + e) - h.dp(q, p - e)) / (2 * eps);
    }
    const Matrix hpp = h.hpp(q, p), hqq = h.hqq(q, p);
    out.derivative_error = std::max({out.derivative_error, rel(gq, h.dq(q, p)), rel(gp, h.dp(q, p)),
                                     rel(fpp, hpp), rel(fqp, h.hqp(q, p)), rel(fqq, hqq)});
    out.symmetry_error = std::max({out.symmetry_error, (hpp - hpp.transpose()).cwiseAbs().maxCoeff(),
                                   (hqq - hqq.transpose()).cwiseAbs().maxCoeff()});
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hpp + hpp.transpose()), Eigen::EigenvaluesOnly);
    out.min_hpp_eigenvalue = std::min(out.min_hpp_eigenvalue, es.eigenvalues()(0));
  }
  out.ok = out.derivative_error <= 1e-5 && out.symmetry_error <= symgeo::kSymmetryTol &&
           out.min_hpp_eigenvalue > 0.0;
  return out;
}

FlowState flow_step(const TonelliHamiltonian& h, const FlowState& s, double dt, const FlowOptions& opts) {
  return integrate(h, s, VariationalFrame(2 * h.dim(), 0), dt, opts).first;
}

std::pair<FlowState, VariationalFrame> variational_step(const TonelliHamiltonian& h, const FlowState& s,
                                                        const VariationalFrame& f, double dt,
                                                        const FlowOptions& opts) {
  return integrate(h, s, f, dt, opts);
}

std::pair<FlowState, VariationalFrame> transport_span(const TonelliHamiltonian& h, const FlowState& s,
                                                      const VariationalFrame& f, double dt, double renorm,
                                                      const FlowOptions& opts) {
  if (!(renorm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "renormalization interval must be > 0");
  const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(dt) / renorm)));
  const double step = dt / static_cast<double>(n);
  std::pair<FlowState, VariationalFrame> cur{s, symgeo::orthonormal_basis(f)};
  for (long i = 0; i < n; ++i) {
    cur = integrate(h, cur.first, cur.second, step, opts);
    cur.second = symgeo::orthonormal_basis(cur.second);
  }
  return cur;
}

}  // namespace twistgreen::tonelli
