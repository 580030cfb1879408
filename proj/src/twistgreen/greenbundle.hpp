#pragma once

// Green bundles along locally minimizing twist-map orbits. Forward images of
// the vertical converge to G+ (slope S+), backward images to G- (slope S-).

#include <span>
#include <vector>

#include "twistgreen/symgeo.hpp"
#include "twistgreen/twistmap.hpp"

namespace twistgreen::greenbundle {

using symgeo::SymMat;
using twistmap::GeneratingFunction;
using twistmap::OrbitSegment;
using twistmap::PeriodicConfiguration;

/// S_{k+1}(x_{n+1}) = -b^T (Phi_11 + S_k(x_n))^-1 b + Phi_22 at (q_n, q_{n+1}).
/// Throws ConjugatePoint unless Phi_11 + S is positive definite and well conditioned.
SymMat riccati_forward_step(const GeneratingFunction& gf, const Vector& q, const Vector& qn,
                            const SymMat& s);
/// S'(x_n) = -Phi_11 - b (S(x_{n+1}) - Phi_22)^-1 b^T at (q_n, q_{n+1}).
/// Throws ConjugatePoint unless Phi_22 - S is positive definite and well conditioned.
SymMat riccati_backward_step(const GeneratingFunction& gf, const Vector& q, const Vector& qn,
                             const SymMat& s_next);

struct GreenPoint {
  long index = 0;
  SymMat s_minus, s_plus;  // limits
  SymMat s_one, s_minus_one;  // seeds Phi_22(q_{n-1}, q_n) and -Phi_11(q_n, q_{n+1})
  SymMat s_two, s_minus_two;  // second iterates, for the ordering chain
};

struct GreenPair {
  std::vector<GreenPoint> points;
  std::vector<double> deltas;  // per iteration: max trace step of both sequences
  int k_used = 0;
  double final_delta = 0.0;
  bool converged = false;
};

struct GreenOptions {
  int k_max = 500;
  double tol = 1e-12;
};

/// Iterates on a finite segment; reports points with k_used steps of history
/// on both sides. Throws PartialResultError<GreenPair> (NonConvergence) and
/// MonotonicityViolation.
GreenPair compute_green_bundles(const OrbitSegment& orbit, const GreenOptions& opts = {});

/// Same limits on a periodic orbit, iterating cyclically over one period.
/// Reports all N points.
GreenPair compute_green_bundles_periodic(const GeneratingFunction& gf, const PeriodicConfiguration& c,
                                         const GreenOptions& opts = {});

/// Smallest eigenvalues of the consecutive differences in
/// S_-1 <= S_-2 <= S_- <= S_+ <= S_2 <= S_1.
struct OrderingMargins {
  double minus_one_to_minus_two = 0.0;
  double minus_two_to_minus = 0.0;
  double minus_to_plus = 0.0;
  double plus_to_two = 0.0;
  double two_to_one = 0.0;

  double min() const;
};

OrderingMargins ordering_margins(const GreenPoint& p);

/// 1/2 sum_n w_n log(det(S+ - S_-1) / det(S- - S_-1)). Empty weights mean uniform.
/// Throws NonPDDenominator.
double theorem2_sum(const GreenPair& g, std::span<const double> weights = {});

struct LowerBound {
  double bound_qplus = 0.0;   // 1/2 sum w log(1 + q+(U - S) / C)
  double bound_conorm = 0.0;  // same with m(U - S)
  double c = 0.0;             // max ||S_1 - S_-1||_2
};

/// zero_tol < 0 selects the default eigenvalue threshold. Throws NoPositiveEigenvalue.
LowerBound theorem4_bound(const GreenPair& g, std::span<const double> weights = {},
                          double zero_tol = -1.0);

}  // namespace twistgreen::greenbundle
