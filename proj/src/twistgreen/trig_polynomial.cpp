#include "twistgreen/trig_polynomial.hpp"

#include <cmath>
#include <numbers>

#include "twistgreen/errors.hpp"

namespace twistgreen {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double phase_of(const TrigTerm& t, const Vector& q) {
  double s = t.phase;
  for (std::size_t i = 0; i < t.wave.size(); ++i) s += kTwoPi * t.wave[i] * q(static_cast<Eigen::Index>(i));
  return s;
}

Vector wave_vector(const TrigTerm& t) {
  Vector k(static_cast<Eigen::Index>(t.wave.size()));
  for (std::size_t i = 0; i < t.wave.size(); ++i) k(static_cast<Eigen::Index>(i)) = t.wave[i];
  return k;
}
}  // namespace

TrigPolynomial::TrigPolynomial(int dim, std::vector<TrigTerm> terms)
    : dim_(dim), terms_(std::move(terms)) {
  if (dim_ < 1) throw Error(ErrorCode::kInvalidArgument, "trigonometric polynomial needs dim >= 1");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.wave.size()) != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "wave vector length differs from dim");
    }
    if (!std::isfinite(t.amplitude) || !std::isfinite(t.phase)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite trigonometric coefficient");
    }
  }
}

double TrigPolynomial::value(const Vector& q) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.amplitude * std::cos(phase_of(t, q));
  return v;
}

Vector TrigPolynomial::gradient(const Vector& q) const {
  Vector g = Vector::Zero(dim_);
  for (const auto& t : terms_) {
    g -= kTwoPi * t.amplitude * std::sin(phase_of(t, q)) * wave_vector(t);
  }
  return g;
}

Matrix TrigPolynomial::hessian(const Vector& q) const {
  Matrix h = Matrix::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    const Vector k = wave_vector(t);
    h -= kTwoPi * kTwoPi * t.amplitude * std::cos(phase_of(t, q)) * (k * k.transpose());
  }
  return h;
}

TrigPolynomial standard_potential(double k) {
  return TrigPolynomial(1, {TrigTerm{{1}, k / (kTwoPi * kTwoPi), 0.0}});
}

}  // namespace twistgreen
