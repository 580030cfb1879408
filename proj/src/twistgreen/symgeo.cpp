#include "twistgreen/symgeo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "twistgreen/errors.hpp"

namespace twistgreen::symgeo {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " has non-finite entries");
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Singular values of a square matrix; throws ConjugatePoint when it is too
// close to singular for a graph to be extracted.
void require_well_conditioned(const Matrix& x, const char* what) {
  Eigen::JacobiSVD<Matrix> svd(x);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || !std::isfinite(smax) || smax / smin > kMaxCondition) {
    throw Error(ErrorCode::kConjugatePoint,
                std::string(what) + " is singular or ill-conditioned (cond=" +
                    std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
  }
}

}  // namespace

double eig_tol(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return 1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}

SymMat::SymMat(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "symmetric matrix must be square with d >= 1");
  }
  require_finite(m, "symmetric matrix");
  const double asym = max_abs(m - m.transpose());
  if (asym > tol * std::max(1.0, max_abs(m))) {
    throw Error(ErrorCode::kInvalidArgument,
                "matrix is not symmetric (asymmetry " + std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::symmetrized(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "symmetric matrix must be square with d >= 1");
  }
  require_finite(m, "symmetric matrix");
  SymMat out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

Vector SymMat::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double SymMat::norm() const { return eigenvalues().cwiseAbs().maxCoeff(); }

SymMat SymMat::operator+(const SymMat& o) const {
  if (o.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMat +");
  return symmetrized(m_ + o.m_);
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (o.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMat -");
  return symmetrized(m_ - o.m_);
}

SymMat SymMat::operator-() const { return symmetrized(-m_); }

SymMat SymMat::operator*(double s) const { return symmetrized(s * m_); }

Matrix SympBlockMat::full() const {
  const int n = dim();
  Matrix m(2 * n, 2 * n);
  m << a, b, c, d;
  return m;
}

SympBlockMat SympBlockMat::from_full(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0 || m.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "symplectic block matrix must be 2d x 2d");
  }
  const Eigen::Index n = m.rows() / 2;
  return {m.topLeftCorner(n, n), m.topRightCorner(n, n), m.bottomLeftCorner(n, n),
          m.bottomRightCorner(n, n)};
}

SympBlockMat SympBlockMat::identity(int d) {
  return {Matrix::Identity(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Identity(d, d)};
}

SympBlockMat SympBlockMat::operator*(const SympBlockMat& r) const {
  if (r.dim() != dim()) throw Error(ErrorCode::kDimensionMismatch, "SympBlockMat *");
  return {a * r.a + b * r.c, a * r.b + b * r.d, c * r.a + d * r.c, c * r.b + d * r.d};
}

SympBlockMat SympBlockMat::symplectic_inverse() const {
  return {d.transpose(), -b.transpose(), -c.transpose(), a.transpose()};
}

bool check_symplectic(const SympBlockMat& m, double tol) {
  const int n = m.dim();
  if (m.b.rows() != n || m.c.rows() != n || m.d.rows() != n) return false;
  if (!m.full().allFinite()) return false;
  const double scale = std::max(1.0, max_abs(m.full()) * max_abs(m.full()));
  const double r1 = max_abs(m.a.transpose() * m.c - m.c.transpose() * m.a);
  const double r2 = max_abs(m.b.transpose() * m.d - m.d.transpose() * m.b);
  const double r3 =
      max_abs(m.d.transpose() * m.a - m.b.transpose() * m.c - Matrix::Identity(n, n));
  return std::max({r1, r2, r3}) <= tol * scale;
}

Matrix symplectic_form(int d) {
  Matrix j = Matrix::Zero(2 * d, 2 * d);
  j.topRightCorner(d, d).setIdentity();
  j.bottomLeftCorner(d, d) = -Matrix::Identity(d, d);
  return j;
}

SymMat graph_transform(const SympBlockMat& m, const SymMat& s) {
  if (m.dim() != s.dim()) throw Error(ErrorCode::kDimensionMismatch, "graph_transform");
  const Matrix x = m.a + m.b * s.matrix();
  require_well_conditioned(x, "a + b S");
  const Matrix y = m.c + m.d * s.matrix();
  // R = Y X^-1  <=>  X^T R^T = Y^T
  const Matrix r = x.transpose().partialPivLu().solve(y.transpose()).transpose();
  return SymMat::symmetrized(r);
}

LagrangianFrame::LagrangianFrame(Matrix columns) : columns_(std::move(columns)) {
  if (columns_.rows() != 2 * columns_.cols() || columns_.cols() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "Lagrangian frame must be 2d x d");
  }
  require_finite(columns_, "frame");
}

LagrangianFrame LagrangianFrame::vertical(int d) {
  Matrix f = Matrix::Zero(2 * d, d);
  f.bottomRows(d).setIdentity();
  return LagrangianFrame(std::move(f));
}

LagrangianFrame LagrangianFrame::graph(const SymMat& s) {
  const int d = s.dim();
  Matrix f(2 * d, d);
  f.topRows(d).setIdentity();
  f.bottomRows(d) = s.matrix();
  return LagrangianFrame(std::move(f));
}

double LagrangianFrame::isotropy_defect() const {
  const int d = dim();
  const double scale = std::max(1e-300, columns_.squaredNorm() / d);
  return max_abs(columns_.transpose() * symplectic_form(d) * columns_) / scale;
}

SymMat LagrangianFrame::graph_matrix() const {
  const int d = dim();
  const Matrix fq = columns_.topRows(d);
  const Matrix fp = columns_.bottomRows(d);
  require_well_conditioned(fq, "frame projection D(pi)F");
  const Matrix s = fq.transpose().partialPivLu().solve(fp.transpose()).transpose();
  return SymMat::symmetrized(s);
}

LagrangianFrame LagrangianFrame::orthonormalized() const {
  return LagrangianFrame(orthonormal_basis(columns_));
}

HeightForm height_form(const SymMat& s, const SymMat& u) {
  if (s.dim() != u.dim()) throw Error(ErrorCode::kDimensionMismatch, "height_form");
  SymMat diff = SymMat::symmetrized(u.matrix() - s.matrix());
  Vector chars = diff.eigenvalues();
  return {std::move(diff), std::move(chars)};
}

double height_distance(const HeightForm& h) {
  const auto& c = h.char_numbers;
  return std::max(std::abs(c(0)), std::abs(c(c.size() - 1)));
}

double q_plus(const SymMat& s, double zero_tol) {
  const double tol = zero_tol >= 0.0 ? zero_tol : eig_tol(s.matrix());
  const Vector ev = s.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol) return ev(i);
  }
  throw Error(ErrorCode::kNoPositiveEigenvalue,
              "no eigenvalue above " + std::to_string(tol));
}

double conorm(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "conorm needs a square matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Matrix orthonormal_basis(const Matrix& f) {
  if (f.cols() < 1 || f.rows() < f.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame must have 1 <= k <= n columns");
  }
  require_finite(f, "frame");
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(sv.size() - 1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kRankDeficient, "frame columns are linearly dependent");
  }
  return svd.matrixU();
}

namespace {

// Rotates the k x k symmetric matrix A (initially diag of principal cosines)
// by plane rotations until all diagonal entries equal the mean. Returns the
// accumulated orthogonal matrix X with X^T A0 X = A.
Matrix equalize_diagonal(Matrix a) {
  const Eigen::Index k = a.rows();
  Matrix x = Matrix::Identity(k, k);
  const double mean = a.trace() / static_cast<double>(k);
  const double eps = 1e-15;
  for (Eigen::Index step = 0; step + 1 < k; ++step) {
    Eigen::Index hi = -1, lo = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (a(i, i) > mean + eps && (hi < 0 || a(i, i) > a(hi, hi))) hi = i;
      if (a(i, i) < mean - eps && (lo < 0 || a(i, i) < a(lo, lo))) lo = i;
    }
    if (hi < 0 || lo < 0) break;
    const double aii = a(hi, hi), ajj = a(lo, lo), aij = a(hi, lo);
    auto f = [&](double t) {
      const double c = std::cos(t), s = std::sin(t);
      return c * c * aii + 2.0 * c * s * aij + s * s * ajj - mean;
    };
    double t0 = 0.0, t1 = 0.5 * std::numbers::pi;
    for (int it = 0; it < 200; ++it) {
      const double tm = 0.5 * (t0 + t1);
      if (f(tm) > 0.0) t0 = tm; else t1 = tm;
    }
    const double t = 0.5 * (t0 + t1);
    Matrix g = Matrix::Identity(k, k);
    g(hi, hi) = std::cos(t);
    g(lo, hi) = std::sin(t);
    g(hi, lo) = -std::sin(t);
    g(lo, lo) = std::cos(t);
    a = g.transpose() * a * g;
    x = x * g;
  }
  return x;
}

}  // namespace

double subspace_distance(const Matrix& e, const Matrix& f) {
  if (e.rows() != f.rows() || e.cols() != f.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "subspace_distance needs equal frame shapes");
  }
  const Matrix qe = orthonormal_basis(e);
  const Matrix qf = orthonormal_basis(f);
  const Eigen::Index k = qe.cols();
  if (k == 1) {
    return std::min((qe.col(0) - qf.col(0)).norm(), (qe.col(0) + qf.col(0)).norm());
  }
  // Procrustes alignment: principal vectors pair up with cosines sigma_i.
  Eigen::JacobiSVD<Matrix> svd(qe.transpose() * qf, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix sigma = svd.singularValues().cwiseMin(1.0).asDiagonal();
  const Matrix x = equalize_diagonal(sigma);
  const Matrix be = qe * svd.matrixU() * x;
  const Matrix bf = qf * svd.matrixV() * x;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) worst = std::max(worst, (be.col(i) - bf.col(i)).norm());
  return worst;
}

int intersection_dimension(const SymMat& s, const SymMat& u, double tol) {
  if (s.dim() != u.dim()) throw Error(ErrorCode::kDimensionMismatch, "intersection_dimension");
  const int d = s.dim();
  Matrix stacked(2 * d, 2 * d);
  stacked << Matrix::Identity(d, d), Matrix::Identity(d, d), s.matrix(), u.matrix();
  Eigen::JacobiSVD<Matrix> svd(stacked);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * std::max(1.0, sv(0))) ++rank;
  }
  return 2 * d - rank;
}

}  // namespace twistgreen::symgeo
