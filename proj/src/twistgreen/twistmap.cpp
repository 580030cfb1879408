#include "twistgreen/twistmap.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "twistgreen/errors.hpp"

namespace twistgreen::twistmap {

namespace {

constexpr int kNewtonMaxIter = 50;

void require_dim(const Vector& v, int d, const char* what) {
  if (v.size() != d) throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has wrong dimension");
}

Matrix solve_twist(const Matrix& b, const Matrix& rhs) {
  Eigen::FullPivLU<Matrix> lu(b);
  if (!lu.isInvertible()) throw Error(ErrorCode::kSingularTwist, "Phi_12 is singular");
  return lu.solve(rhs);
}

// Damped Newton for F(x) = 0 with Jacobian J(x). Halves the step until |F| decreases.
template <class F, class J>
Vector damped_newton(Vector x, double tol, F&& f, J&& jac, const char* what) {
  Vector r = f(x);
  double rn = r.norm();
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    if (!std::isfinite(rn)) break;
    if (rn <= tol) return x;
    const Vector step = solve_twist(jac(x), -r);
    double t = 1.0;
    Vector xn = x + step;
    Vector rnew = f(xn);
    while (!(rnew.norm() < rn) && t > 1e-10) {
      t *= 0.5;
      xn = x + t * step;
      rnew = f(xn);
    }
    x = std::move(xn);
    r = std::move(rnew);
    rn = r.norm();
  }
  if (rn <= tol) return x;
  throw Error(ErrorCode::kNewtonDivergence,
              std::string(what) + ": residual " + std::to_string(rn) + " after 50 iterations");
}

}  // namespace

TrigTwistFamily::TrigTwistFamily(TrigPolynomial potential) : potential_(std::move(potential)) {}

double TrigTwistFamily::value(const Vector& q, const Vector& qn) const {
  return 0.5 * (qn - q).squaredNorm() + potential_.value(q);
}

Vector TrigTwistFamily::d1(const Vector& q, const Vector& qn) const {
  return -(qn - q) + potential_.gradient(q);
}

Vector TrigTwistFamily::d2(const Vector& q, const Vector& qn) const { return qn - q; }

Matrix TrigTwistFamily::d11(const Vector& q, const Vector&) const {
  return Matrix::Identity(dim(), dim()) + potential_.hessian(q);
}

Matrix TrigTwistFamily::d12(const Vector&, const Vector&) const {
  return -Matrix::Identity(dim(), dim());
}

Matrix TrigTwistFamily::d22(const Vector&, const Vector&) const {
  return Matrix::Identity(dim(), dim());
}

std::shared_ptr<const TrigTwistFamily> standard_family(double k) {
  return std::make_shared<const TrigTwistFamily>(standard_potential(k));
}

GeneratingFunctionCheck validate_generating_function(const GeneratingFunction& gf,
                                                     std::uint64_t seed, int samples) {
  const int d = gf.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> shift(-3, 3);
  auto rand_vec = [&] {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = u(rng);
    return v;
  };
  constexpr double h = 1e-5;
  const double k_twist = gf.twist_constant();

  GeneratingFunctionCheck out;
  out.worst_twist = -std::numeric_limits<double>::infinity();
  auto rel = [](const auto& fd, const auto& exact) {
    return (fd - exact).cwiseAbs().maxCoeff() / (1.0 + exact.cwiseAbs().maxCoeff());
  };
  for (int s = 0; s < samples; ++s) {
    const Vector q = rand_vec();
    const Vector qn = q + rand_vec();
    Vector k(d);
    for (int i = 0; i < d; ++i) k(i) = shift(rng);
    out.periodicity_error = std::max(out.periodicity_error,
                                     std::abs(gf.value(q + k, qn + k) - gf.value(q, qn)));

    const Matrix b = gf.d12(q, qn);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.transpose()));
    out.worst_twist = std::max(out.worst_twist, es.eigenvalues().maxCoeff());

    const Matrix a11 = gf.d11(q, qn), a22 = gf.d22(q, qn);
    out.symmetry_error = std::max({out.symmetry_error, (a11 - a11.transpose()).cwiseAbs().maxCoeff(),
                                   (a22 - a22.transpose()).cwiseAbs().maxCoeff()});

    Vector g1(d), g2(d);
    Matrix h11(d, d), h12(d, d), h22(d, d);
    for (int i = 0; i < d; ++i) {
      Vector e = Vector::Zero(d);
      e(i) = h;
      g1(i) = (gf.value(q + e, qn) - gf.value(q - e, qn)) / (2 * h);
      g2(i) = (gf.value(q, qn + e) - gf.value(q, qn - e)) / (2 * h);
      h11.col(i) = (gf.d1(q + e, qn) - gf.d1(q - e, qn)) / (2 * h);
      h12.col(i) = (gf.d1(q, qn + e) - gf.d1(q, qn - e)) / (2 * h);
      h22.col(i) = (gf.d2(q, qn + e) - gf.d2(q, qn - e)) / (2 * h);
    }
    out.derivative_error = std::max({out.derivative_error, rel(g1, gf.d1(q, qn)), rel(g2, gf.d2(q, qn)),
                                     rel(h11, a11), rel(h12, b), rel(h22, a22)});
  }
  out.ok = out.periodicity_error <= 1e-9 && out.worst_twist <= -k_twist + 1e-12 &&
           out.symmetry_error <= symgeo::kSymmetryTol && out.derivative_error <= 1e-5;
  return out;
}

PhasePoint forward_map(const GeneratingFunction& gf, const Vector& q, const Vector& p) {
  require_dim(q, gf.dim(), "q");
  require_dim(p, gf.dim(), "p");
  const double tol = 1e-12 * (1.0 + p.norm());
  Vector qn = damped_newton(
      Vector(q + p), tol, [&](const Vector& x) -> Vector { return gf.d1(q, x) + p; },
      [&](const Vector& x) { return gf.d12(q, x); }, "forward_map");
  Vector pn = gf.d2(q, qn);
  return {std::move(qn), std::move(pn)};
}

PhasePoint inverse_map(const GeneratingFunction& gf, const Vector& qn, const Vector& pn) {
  require_dim(qn, gf.dim(), "Q");
  require_dim(pn, gf.dim(), "P");
  const double tol = 1e-12 * (1.0 + pn.norm());
  // d/dq Phi_2(q, Q) = Phi_21(q, Q) = Phi_12(q, Q)^T.
  Vector q = damped_newton(
      Vector(qn - pn), tol, [&](const Vector& x) -> Vector { return gf.d2(x, qn) - pn; },
      [&](const Vector& x) -> Matrix { return gf.d12(x, qn).transpose(); }, "inverse_map");
  Vector p = -gf.d1(q, qn);
  return {std::move(q), std::move(p)};
}

SympBlockMat tangent_map(const GeneratingFunction& gf, const Vector& q, const Vector& qn) {
  const Matrix b = gf.d12(q, qn);
  const Matrix a11 = gf.d11(q, qn);
  const Matrix a22 = gf.d22(q, qn);
  const Matrix binv = solve_twist(b, Matrix::Identity(b.rows(), b.cols()));
  SympBlockMat m;
  m.a = -binv * a11;
  m.b = -binv;
  m.c = b.transpose() - a22 * binv * a11;
  m.d = -a22 * binv;
  return m;
}

OrbitSegment::OrbitSegment(std::shared_ptr<const GeneratingFunction> gf, std::vector<Vector> configs,
                           long first_index, std::vector<Vector> momenta)
    : gf_(std::move(gf)), first_(first_index), q_(std::move(configs)), p_(std::move(momenta)) {
  if (!gf_) throw Error(ErrorCode::kInvalidArgument, "null generating function");
  if (q_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "orbit segment needs at least two points");
  const int d = gf_->dim();
  for (const auto& q : q_) require_dim(q, d, "configuration");
  const std::size_t n = q_.size();
  if (p_.empty()) {
    p_.reserve(n);
    for (std::size_t i = 0; i + 1 < n; ++i) p_.push_back(-gf_->d1(q_[i], q_[i + 1]));
    p_.push_back(gf_->d2(q_[n - 2], q_[n - 1]));
  } else if (p_.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "momenta and configurations differ in length");
  }
  b_.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) b_.push_back(gf_->d12(q_[i], q_[i + 1]));
  a_.reserve(n);
  a_.emplace_back();  // endpoint placeholder, never handed out
  for (std::size_t i = 1; i + 1 < n; ++i) {
    a_.push_back(gf_->d11(q_[i], q_[i + 1]) + gf_->d22(q_[i - 1], q_[i]));
  }
}

const Matrix& OrbitSegment::a(long n) const {
  if (n <= first() || n >= last()) throw Error(ErrorCode::kInvalidArgument, "a_n needs an interior index");
  return a_[static_cast<std::size_t>(n - first_)];
}

const Matrix& OrbitSegment::b(long n) const {
  if (n < first() || n >= last()) throw Error(ErrorCode::kInvalidArgument, "b_n index out of range");
  return b_[static_cast<std::size_t>(n - first_)];
}

double OrbitSegment::momentum_consistency() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < q_.size(); ++i) {
    if (i > 0) worst = std::max(worst, (p_[i] - gf_->d2(q_[i - 1], q_[i])).cwiseAbs().maxCoeff());
    if (i + 1 < q_.size()) {
      worst = std::max(worst, (p_[i] + gf_->d1(q_[i], q_[i + 1])).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

OrbitSegment iterate_orbit(std::shared_ptr<const GeneratingFunction> gf, const PhasePoint& x0,
                           long steps, long first_index) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "iterate_orbit needs steps >= 1");
  std::vector<Vector> qs{x0.q}, ps{x0.p};
  qs.reserve(static_cast<std::size_t>(steps) + 1);
  ps.reserve(static_cast<std::size_t>(steps) + 1);
  PhasePoint x = x0;
  for (long i = 0; i < steps; ++i) {
    x = forward_map(*gf, x.q, x.p);
    qs.push_back(x.q);
    ps.push_back(x.p);
  }
  return OrbitSegment(std::move(gf), std::move(qs), first_index, std::move(ps));
}

Vector jacobi_propagate(const OrbitSegment& orbit, long n, const Vector& zeta_prev,
                        const Vector& zeta_n) {
  const Vector rhs = orbit.b(n - 1).transpose() * zeta_prev + orbit.a(n) * zeta_n;
  return -solve_twist(orbit.b(n), rhs);
}

double action(const GeneratingFunction& gf, std::span<const Vector> configs) {
  if (configs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "action needs at least two points");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < configs.size(); ++i) s += gf.value(configs[i], configs[i + 1]);
  return s;
}

Matrix euler_lagrange_residual(const GeneratingFunction& gf, std::span<const Vector> configs) {
  if (configs.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "residual needs at least three points");
  }
  Matrix r(gf.dim(), static_cast<Eigen::Index>(configs.size() - 2));
  for (std::size_t i = 1; i + 1 < configs.size(); ++i) {
    r.col(static_cast<Eigen::Index>(i - 1)) =
        gf.d2(configs[i - 1], configs[i]) + gf.d1(configs[i], configs[i + 1]);
  }
  return r;
}

Matrix BlockTridiagonal::dense() const {
  if (diag.empty()) return Matrix(0, 0);
  const Eigen::Index d = diag.front().rows();
  const Eigen::Index n = static_cast<Eigen::Index>(diag.size());
  Matrix m = Matrix::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.block(i * d, i * d, d, d) = diag[static_cast<std::size_t>(i)];
    if (i + 1 < n) {
      m.block(i * d, (i + 1) * d, d, d) = upper[static_cast<std::size_t>(i)];
      m.block((i + 1) * d, i * d, d, d) = upper[static_cast<std::size_t>(i)].transpose();
    }
  }
  return m;
}

BlockTridiagonal hessian(const OrbitSegment& orbit) {
  BlockTridiagonal h;
  for (long n = orbit.first() + 1; n < orbit.last(); ++n) {
    h.diag.push_back(orbit.a(n));
    if (n + 1 < orbit.last()) h.upper.push_back(orbit.b(n));
  }
  return h;
}

std::size_t positive_definite_prefix(const BlockTridiagonal& h) {
  if (h.diag.empty()) return 0;
  Matrix schur = h.diag.front();
  for (std::size_t i = 0;; ++i) {
    Eigen::LLT<Matrix> llt(0.5 * (schur + schur.transpose()));
    if (llt.info() != Eigen::Success) return i;
    const double scale = 1.0 + h.diag[i].cwiseAbs().maxCoeff();
    if (llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-7 * std::sqrt(scale)) return i;
    if (i + 1 == h.diag.size()) return h.diag.size();
    const Matrix& b = h.upper[i];
    schur = h.diag[i + 1] - b.transpose() * llt.solve(b);
  }
}

Vector PeriodicConfiguration::point(long n) const {
  const long np = period;
  long k = n / np;
  long r = n % np;
  if (r < 0) {
    r += np;
    k -= 1;
  }
  return points[static_cast<std::size_t>(r)] + static_cast<double>(k) * rotation;
}

std::vector<Vector> PeriodicConfiguration::unrolled(long first, long count) const {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, count)));
  for (long i = 0; i < count; ++i) out.push_back(point(first + i));
  return out;
}

PeriodicConfiguration make_periodic(const Vector& rotation, std::vector<Vector> points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "periodic configuration needs N >= 1");
  for (Eigen::Index i = 0; i < rotation.size(); ++i) {
    if (rotation(i) != std::round(rotation(i))) {
      throw Error(ErrorCode::kInvalidArgument, "rotation vector must be integer");
    }
  }
  for (const auto& p : points) require_dim(p, static_cast<int>(rotation.size()), "periodic point");
  PeriodicConfiguration c;
  c.period = static_cast<int>(points.size());
  c.rotation = rotation;
  c.points = std::move(points);
  return c;
}

double periodic_action(const GeneratingFunction& gf, const PeriodicConfiguration& c) {
  double s = 0.0;
  for (long n = 0; n < c.period; ++n) s += gf.value(c.point(n), c.point(n + 1));
  return s;
}

Matrix periodic_residual(const GeneratingFunction& gf, const PeriodicConfiguration& c) {
  Matrix r(c.dim(), c.period);
  for (long n = 0; n < c.period; ++n) {
    const Vector qm = c.point(n - 1), q = c.point(n), qp = c.point(n + 1);
    r.col(n) = gf.d2(qm, q) + gf.d1(q, qp);
  }
  return r;
}

Matrix periodic_hessian(const GeneratingFunction& gf, const PeriodicConfiguration& c) {
  const Eigen::Index d = c.dim();
  const long np = c.period;
  Matrix h = Matrix::Zero(np * d, np * d);
  for (long n = 0; n < np; ++n) {
    const Vector q = c.point(n), qp = c.point(n + 1);
    const long m = (n + 1) % np;
    const Matrix b = gf.d12(q, qp);
    h.block(n * d, n * d, d, d) += gf.d11(q, qp);
    h.block(m * d, m * d, d, d) += gf.d22(q, qp);
    h.block(n * d, m * d, d, d) += b;
    h.block(m * d, n * d, d, d) += b.transpose();
  }
  return 0.5 * (h + h.transpose());
}

Certificate certify(std::shared_ptr<const GeneratingFunction> gf, const PeriodicConfiguration& c,
                    int periods) {
  Certificate cert;
  cert.residual = periodic_residual(*gf, c).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(periodic_hessian(*gf, c));
  const Vector& ev = es.eigenvalues();
  cert.min_eigenvalue = ev(0);
  const double ktol = 1e-9 * (1.0 + ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= ktol) ++cert.kernel_dim;
  }
  cert.semidefinite = ev(0) >= -ktol;

  const long count = static_cast<long>(std::max(1, periods)) * c.period + 1;
  OrbitSegment seg(gf, c.unrolled(0, std::max(3L, count)));
  const BlockTridiagonal h = hessian(seg);
  cert.segment_points = static_cast<long>(h.blocks());
  cert.segment_positive_definite = is_positive_definite(h);

  if (cert.residual > kCertifyResidual) {
    cert.reason = "residual above 1e-10";
  } else if (!cert.semidefinite) {
    cert.reason = "periodic Hessian has a negative eigenvalue";
  } else if (!cert.segment_positive_definite) {
    cert.reason = "unrolled segment Hessian is not positive definite";
  } else {
    cert.certified = true;
    cert.reason = cert.kernel_dim > 0 ? "semidefinite, kernel dimension " + std::to_string(cert.kernel_dim)
                                      : "positive definite";
  }
  return cert;
}

}  // namespace twistgreen::twistmap
