#pragma once

#include <vector>

#include "twistgreen/symgeo.hpp"

namespace twistgreen {

/// One term amplitude * cos(2 pi <k, q> + phase) with an integer wave vector.
struct TrigTerm {
  std::vector<int> wave;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Z^d-periodic trigonometric polynomial V(q) = sum of TrigTerm.
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  TrigPolynomial(int dim, std::vector<TrigTerm> terms);

  int dim() const { return dim_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  double value(const Vector& q) const;
  Vector gradient(const Vector& q) const;
  Matrix hessian(const Vector& q) const;

 private:
  int dim_ = 0;
  std::vector<TrigTerm> terms_;
};

/// (K / 4 pi^2) cos(2 pi q) in one dimension.
TrigPolynomial standard_potential(double k);

}  // namespace twistgreen
