#include "twistgreen/greenbundle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "twistgreen/errors.hpp"
#include "twistgreen/weights.hpp"

namespace twistgreen::greenbundle {

namespace {

// Cholesky of a matrix that must be positive definite with cond <= kMaxCondition.
Eigen::LLT<Matrix> pd_factor(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kConjugatePoint, std::string(what) + " is not positive definite");
  }
  const Vector dl = llt.matrixLLT().diagonal();
  const double ratio = dl.minCoeff() / dl.maxCoeff();
  if (!(ratio * ratio * symgeo::kMaxCondition >= 1.0)) {
    throw Error(ErrorCode::kConjugatePoint, std::string(what) + " is ill-conditioned");
  }
  return llt;
}

double min_eig(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Throws MonotonicityViolation unless hi - lo is positive semidefinite within tolerance.
void require_ordered(const SymMat& lo, const SymMat& hi, long index, const char* which) {
  const double tol = symgeo::eig_tol(hi.matrix());
  if (min_eig(hi.matrix() - lo.matrix()) < -tol) {
    throw Error(ErrorCode::kMonotonicityViolation,
                std::string(which) + " iterates not monotone at orbit index " + std::to_string(index));
  }
}

double log_det_pd(const Matrix& m, long index) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNonPDDenominator,
                "S - S_-1 is not positive definite at orbit index " + std::to_string(index));
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

SymMat riccati_forward_step(const GeneratingFunction& gf, const Vector& q, const Vector& qn,
                            const SymMat& s) {
  const Matrix b = gf.d12(q, qn);
  const auto llt = pd_factor(gf.d11(q, qn) + s.matrix(), "Phi_11 + S");
  return SymMat::symmetrized(gf.d22(q, qn) - b.transpose() * llt.solve(b));
}

SymMat riccati_backward_step(const GeneratingFunction& gf, const Vector& q, const Vector& qn,
                             const SymMat& s_next) {
  const Matrix b = gf.d12(q, qn);
  const auto llt = pd_factor(gf.d22(q, qn) - s_next.matrix(), "Phi_22 - S");
  // -b (S - Phi_22)^-1 b^T = b (Phi_22 - S)^-1 b^T.
  return SymMat::symmetrized(-gf.d11(q, qn) + b * llt.solve(b.transpose()));
}

GreenPair compute_green_bundles(const OrbitSegment& orbit, const GreenOptions& opts) {
  if (opts.k_max < 1 || !(opts.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bad Green options");
  const GeneratingFunction& gf = orbit.gf();
  const long m0 = orbit.first(), n1 = orbit.last();
  auto at = [m0](long n) { return static_cast<std::size_t>(n - m0); };
  const std::size_t len = orbit.size();

  std::vector<SymMat> fwd(len), bwd(len), seed_f(len), seed_b(len), two_f, two_b;
  for (long n = m0 + 1; n <= n1; ++n) fwd[at(n)] = SymMat::symmetrized(gf.d22(orbit.q(n - 1), orbit.q(n)));
  for (long n = m0; n < n1; ++n) bwd[at(n)] = SymMat::symmetrized(-gf.d11(orbit.q(n), orbit.q(n + 1)));
  seed_f = fwd;
  seed_b = bwd;

  GreenPair out;
  int k = 1;
  for (; k < opts.k_max; ++k) {
    // fwd holds S_k on [m0 + k, n1], bwd holds S_-k on [m0, n1 - k].
    const long lo = m0 + k + 1, hi = n1 - k - 1;
    if (lo > hi) {
      GreenPair partial = out;
      partial.k_used = k;
      throw PartialResultError<GreenPair>(ErrorCode::kNonConvergence,
                                          "orbit segment too short for the Green iteration", partial);
    }
    double delta = 0.0;
    for (long n = n1; n >= m0 + k + 1; --n) {
      SymMat next = riccati_forward_step(gf, orbit.q(n - 1), orbit.q(n), fwd[at(n - 1)]);
      require_ordered(next, fwd[at(n)], n, "forward");
      if (n >= lo && n <= hi) delta = std::max(delta, (fwd[at(n)].matrix() - next.matrix()).trace());
      fwd[at(n)] = std::move(next);
    }
    for (long n = m0; n <= n1 - k - 1; ++n) {
      SymMat next = riccati_backward_step(gf, orbit.q(n), orbit.q(n + 1), bwd[at(n + 1)]);
      require_ordered(bwd[at(n)], next, n, "backward");
      if (n >= lo && n <= hi) delta = std::max(delta, (next.matrix() - bwd[at(n)].matrix()).trace());
      bwd[at(n)] = std::move(next);
    }
    if (k == 1) {
      two_f = fwd;
      two_b = bwd;
    }
    out.deltas.push_back(delta);
    out.final_delta = delta;
    if (delta < opts.tol) {
      out.converged = true;
      ++k;
      break;
    }
  }
  out.k_used = k;
  if (two_f.empty()) {
    two_f = fwd;
    two_b = bwd;
  }
  for (long n = m0 + k; n <= n1 - k; ++n) {
    GreenPoint p;
    p.index = n;
    p.s_plus = fwd[at(n)];
    p.s_minus = bwd[at(n)];
    p.s_one = seed_f[at(n)];
    p.s_minus_one = seed_b[at(n)];
    p.s_two = two_f[at(n)];
    p.s_minus_two = two_b[at(n)];
    out.points.push_back(std::move(p));
  }
  if (!out.converged) {
    throw PartialResultError<GreenPair>(
        ErrorCode::kNonConvergence,
        "Green iteration did not reach tol within k_max = " + std::to_string(opts.k_max), out);
  }
  return out;
}

GreenPair compute_green_bundles_periodic(const GeneratingFunction& gf, const PeriodicConfiguration& c,
                                         const GreenOptions& opts) {
  if (opts.k_max < 1 || !(opts.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bad Green options");
  const long np = c.period;
  std::vector<Vector> q = c.unrolled(-1, np + 2);  // q[i] = q_{i-1}
  auto qq = [&](long n) -> const Vector& { return q[static_cast<std::size_t>(n + 1)]; };

  std::vector<SymMat> fwd(np), bwd(np);
  for (long n = 0; n < np; ++n) {
    fwd[n] = SymMat::symmetrized(gf.d22(qq(n - 1), qq(n)));
    bwd[n] = SymMat::symmetrized(-gf.d11(qq(n), qq(n + 1)));
  }
  const std::vector<SymMat> seed_f = fwd, seed_b = bwd;
  std::vector<SymMat> two_f, two_b;

  GreenPair out;
  std::vector<SymMat> nf(np), nb(np);
  int k = 1;
  for (; k < opts.k_max; ++k) {
    double delta = 0.0;
    for (long n = 0; n < np; ++n) {
      // S_{k+1}(x_n) from S_k(x_{n-1}); x_{-1} is x_{N-1} shifted by -m, same slope.
      nf[n] = riccati_forward_step(gf, qq(n - 1), qq(n), fwd[(n + np - 1) % np]);
      require_ordered(nf[n], fwd[n], n, "forward");
      nb[n] = riccati_backward_step(gf, qq(n), qq(n + 1), bwd[(n + 1) % np]);
      require_ordered(bwd[n], nb[n], n, "backward");
      delta = std::max({delta, (fwd[n].matrix() - nf[n].matrix()).trace(),
                        (nb[n].matrix() - bwd[n].matrix()).trace()});
    }
    fwd.swap(nf);
    bwd.swap(nb);
    if (k == 1) {
      two_f = fwd;
      two_b = bwd;
    }
    out.deltas.push_back(delta);
    out.final_delta = delta;
    if (delta < opts.tol) {
      out.converged = true;
      ++k;
      break;
    }
  }
  out.k_used = k;
  if (two_f.empty()) {
    two_f = fwd;
    two_b = bwd;
  }
  for (long n = 0; n < np; ++n) {
    GreenPoint p;
    p.index = n;
    p.s_plus = fwd[n];
    p.s_minus = bwd[n];
    p.s_one = seed_f[n];
    p.s_minus_one = seed_b[n];
    p.s_two = two_f[n];
    p.s_minus_two = two_b[n];
    out.points.push_back(std::move(p));
  }
  if (!out.converged) {
    throw PartialResultError<GreenPair>(
        ErrorCode::kNonConvergence,
        "Green iteration did not reach tol within k_max = " + std::to_string(opts.k_max), out);
  }
  return out;
}

double OrderingMargins::min() const {
  return std::min({minus_one_to_minus_two, minus_two_to_minus, minus_to_plus, plus_to_two, two_to_one});
}

OrderingMargins ordering_margins(const GreenPoint& p) {
  OrderingMargins m;
  m.minus_one_to_minus_two = min_eig(p.s_minus_two.matrix() - p.s_minus_one.matrix());
  m.minus_two_to_minus = min_eig(p.s_minus.matrix() - p.s_minus_two.matrix());
  m.minus_to_plus = min_eig(p.s_plus.matrix() - p.s_minus.matrix());
  m.plus_to_two = min_eig(p.s_two.matrix() - p.s_plus.matrix());
  m.two_to_one = min_eig(p.s_one.matrix() - p.s_two.matrix());
  return m;
}

double theorem2_sum(const GreenPair& g, std::span<const double> weights) {
  const auto w = normalized_weights(weights, g.points.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const GreenPoint& p = g.points[i];
    const Matrix& base = p.s_minus_one.matrix();
    s += w[i] * (log_det_pd(p.s_plus.matrix() - base, p.index) - log_det_pd(p.s_minus.matrix() - base, p.index));
  }
  return 0.5 * s;
}

LowerBound theorem4_bound(const GreenPair& g, std::span<const double> weights, double zero_tol) {
  const auto w = normalized_weights(weights, g.points.size());
  LowerBound out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const GreenPoint& p = g.points[i];
    out.c = std::max(out.c, (p.s_one - p.s_minus_one).norm());
  }
  if (!(out.c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "degenerate seed spread C = 0");
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const GreenPoint& p = g.points[i];
    const SymMat gap = p.s_plus - p.s_minus;
    out.bound_qplus += w[i] * std::log1p(symgeo::q_plus(gap, zero_tol) / out.c);
    out.bound_conorm += w[i] * std::log1p(symgeo::conorm(gap.matrix()) / out.c);
  }
  out.bound_qplus *= 0.5;
  out.bound_conorm *= 0.5;
  return out;
}

}  // namespace twistgreen::greenbundle
