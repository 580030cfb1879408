#pragma once

// Linear symplectic algebra on R^d x R^d in (dq, dp) coordinates: symmetric
// slope matrices, symplectic block matrices, Lagrangian frames, heights and
// the spectral functionals used by the exponent bounds.

#include <Eigen/Dense>

namespace twistgreen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace symgeo {

inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kSymplecticTol = 1e-9;
inline constexpr double kMaxCondition = 1e12;

/// Eigenvalue zero-threshold 1e-10 * (1 + ||S||_2).
double eig_tol(const Matrix& s);

/// A symmetric d x d matrix. Its graph {(dq, S dq)} is a Lagrangian subspace
/// transverse to the vertical.
class SymMat {
 public:
  SymMat() = default;
  /// Validates symmetry relative to the entry scale, then stores (M + M^T) / 2.
  explicit SymMat(const Matrix& m, double tol = kSymmetryTol);

  static SymMat symmetrized(const Matrix& m);
  static SymMat zero(int d) { return symmetrized(Matrix::Zero(d, d)); }
  static SymMat identity(int d) { return symmetrized(Matrix::Identity(d, d)); }
  static SymMat scalar(double s) { return symmetrized(Matrix::Constant(1, 1, s)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  /// Ascending eigenvalues from the symmetric eigensolver.
  Vector eigenvalues() const;
  double min_eigenvalue() const { return eigenvalues()(0); }
  double norm() const;  // spectral norm

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator-() const;
  SymMat operator*(double s) const;

 private:
  Matrix m_;
};

/// 2d x 2d matrix [[a, b], [c, d]] acting on (dq, dp).
struct SympBlockMat {
  Matrix a, b, c, d;

  int dim() const { return static_cast<int>(a.rows()); }
  Matrix full() const;
  static SympBlockMat from_full(const Matrix& m);
  static SympBlockMat identity(int d);

  SympBlockMat operator*(const SympBlockMat& rhs) const;
  /// Inverse through the symplectic identity M^-1 = [[d^T, -b^T], [-c^T, a^T]].
  /// Exact only when M is symplectic.
  SympBlockMat symplectic_inverse() const;
};

bool check_symplectic(const SympBlockMat& m, double tol = kSymplecticTol);

/// Standard symplectic form J = [[0, I], [-I, 0]].
Matrix symplectic_form(int d);

/// Image of graph(S) under M: (c + d S)(a + b S)^-1, symmetrized.
/// Throws ConjugatePoint if a + b S is singular or cond > kMaxCondition.
SymMat graph_transform(const SympBlockMat& m, const SymMat& s);

/// A 2d x d frame whose column span is (ideally) Lagrangian.
class LagrangianFrame {
 public:
  explicit LagrangianFrame(Matrix columns);

  static LagrangianFrame vertical(int d);
  static LagrangianFrame graph(const SymMat& s);

  int dim() const { return static_cast<int>(columns_.cols()); }
  const Matrix& columns() const { return columns_; }
  /// ||F^T J F||_max relative to ||F||^2.
  double isotropy_defect() const;
  bool is_isotropic(double tol = kSymplecticTol) const { return isotropy_defect() <= tol; }
  /// Slope matrix S with span(F) = graph(S). Throws ConjugatePoint when the
  /// frame meets the vertical.
  SymMat graph_matrix() const;
  /// Same span, orthonormal columns.
  LagrangianFrame orthonormalized() const;

 private:
  Matrix columns_;
};

/// Height of graph(U) above graph(S): the symmetric operator U - S and its
/// characteristic numbers.
struct HeightForm {
  SymMat matrix;
  Vector char_numbers;  // ascending
};

HeightForm height_form(const SymMat& s, const SymMat& u);
/// max(|lambda_1|, |lambda_d|).
double height_distance(const HeightForm& h);

/// Smallest eigenvalue strictly above zero_tol (default eig_tol(S)).
/// Throws NoPositiveEigenvalue.
double q_plus(const SymMat& s, double zero_tol = -1.0);

/// ||A^-1||^-1, the smallest singular value; 0 for singular A.
double conorm(const Matrix& a);

/// Distance between equal-dimensional subspaces given by spanning frames:
/// inf over orthonormal bases (e_i), (f_i) of max_i ||e_i - f_i||.
/// The value is attained by explicit bases (principal vectors rotated so all
/// pairs share the mean principal cosine), so it is never below the true value.
double subspace_distance(const Matrix& e, const Matrix& f);

/// Orthonormal basis of span(F); throws RankDeficient.
Matrix orthonormal_basis(const Matrix& f);

/// dim(graph(S) cap graph(U)) from the rank of the stacked 2d x 2d frame.
int intersection_dimension(const SymMat& s, const SymMat& u, double tol = 1e-10);

}  // namespace symgeo
}  // namespace twistgreen
