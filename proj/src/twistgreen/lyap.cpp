#include "twistgreen/lyap.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "twistgreen/errors.hpp"
#include "twistgreen/weights.hpp"

namespace twistgreen::lyap {

namespace {

constexpr int kTailPoints = 100;

// QR with nonnegative diagonal of R; throws DegenerateCocycle on a zero pivot.
Vector qr_in_place(Matrix& f) {
  Eigen::HouseholderQR<Matrix> qr(f);
  Matrix q = qr.householderQ() * Matrix::Identity(f.rows(), f.cols());
  Vector r = qr.matrixQR().diagonal().head(f.cols());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r(i) < 0.0) {
      r(i) = -r(i);
      q.col(i) = -q.col(i);
    }
    if (!(r(i) > 0.0) || !std::isfinite(r(i))) {
      throw Error(ErrorCode::kDegenerateCocycle, "cocycle collapsed a frame direction");
    }
  }
  f = std::move(q);
  return r;
}

void check_cocycle(std::span<const SympBlockMat> c) {
  if (c.empty()) throw Error(ErrorCode::kInvalidArgument, "empty cocycle");
  const int d = c.front().dim();
  for (const auto& m : c) {
    if (m.dim() != d || m.b.rows() != d || m.c.rows() != d || m.d.rows() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "cocycle elements differ in dimension");
    }
    if (!m.full().allFinite()) throw Error(ErrorCode::kDegenerateCocycle, "non-finite cocycle element");
  }
}

double upper_half(const Vector& logs) {
  const Eigen::Index d = logs.size() / 2;
  return logs.head(d).sum();
}

void finish(LyapunovSpectrum& s, const Vector& logs, double scale) {
  s.exponents.resize(static_cast<std::size_t>(logs.size()));
  for (Eigen::Index i = 0; i < logs.size(); ++i) s.exponents[static_cast<std::size_t>(i)] = logs(i) / scale;
  std::sort(s.exponents.begin(), s.exponents.end(), std::greater<>());
  if (!s.tail.empty()) {
    const std::size_t half = s.tail.size() / 2;
    const auto [lo, hi] = std::minmax_element(s.tail.begin() + static_cast<long>(half), s.tail.end());
    s.band = *hi - *lo;
  }
}

}  // namespace

double default_zero_threshold(double n) { return std::max(5.0 / std::sqrt(n), 1e-4); }

LyapunovSpectrum lyapunov_spectrum_map(std::span<const SympBlockMat> cocycle, const MapSpectrumOptions& opts) {
  check_cocycle(cocycle);
  if (opts.renorm_every < 1 || opts.n < opts.renorm_every || opts.transient < 0) {
    throw Error(ErrorCode::kInvalidArgument, "need n >= renorm_every >= 1 and transient >= 0");
  }
  const int d = cocycle.front().dim();
  const std::size_t len = cocycle.size();
  std::vector<Matrix> full;
  full.reserve(len);
  for (const auto& m : cocycle) full.push_back(m.full());

  Matrix f = Matrix::Identity(2 * d, 2 * d);
  long step = 0;
  auto advance = [&](long count) {
    for (long i = 0; i < count; ++i) {
      f = full[static_cast<std::size_t>(step) % len] * f;
      ++step;
    }
  };
  for (long done = 0; done < opts.transient; done += opts.renorm_every) {
    advance(std::min<long>(opts.renorm_every, opts.transient - done));
    qr_in_place(f);
  }

  LyapunovSpectrum s;
  s.n_steps = opts.n;
  s.zero_threshold = opts.zero_threshold >= 0.0 ? opts.zero_threshold
                                                : default_zero_threshold(static_cast<double>(opts.n));
  Vector logs = Vector::Zero(2 * d);
  const long tail_every = std::max(1L, opts.n / kTailPoints);
  long next_tail = tail_every;
  for (long done = 0; done < opts.n;) {
    const long chunk = std::min<long>(opts.renorm_every, opts.n - done);
    advance(chunk);
    done += chunk;
    logs += qr_in_place(f).array().log().matrix();
    if (done >= next_tail) {
      Vector sorted = logs;
      std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
      s.tail.push_back(upper_half(sorted) / static_cast<double>(done));
      next_tail += tail_every;
    }
  }
  finish(s, logs, static_cast<double>(opts.n));
  return s;
}

LyapunovSpectrum lyapunov_spectrum_flow(const tonelli::TonelliHamiltonian& h, const tonelli::FlowState& x,
                                        const FlowSpectrumOptions& opts) {
  if (!(opts.t > 0.0) || !(opts.renorm_every > 0.0) || !(opts.transient >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need t > 0, renorm_every > 0, transient >= 0");
  }
  const int d = h.dim();
  tonelli::FlowState cur = x;
  Matrix f = Matrix::Identity(2 * d, 2 * d);
  auto run = [&](double span, auto&& on_chunk) {
    const long n = std::max(1L, static_cast<long>(std::ceil(span / opts.renorm_every)));
    const double dt = span / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      auto next = tonelli::variational_step(h, cur, f, dt, opts.flow);
      cur = std::move(next.first);
      f = std::move(next.second);
      const Vector r = qr_in_place(f);
      on_chunk(r, (i + 1) * dt, i + 1, n);
    }
    return n;
  };
  if (opts.transient > 0.0) run(opts.transient, [](const Vector&, double, long, long) {});

  LyapunovSpectrum s;
  s.zero_threshold = opts.zero_threshold >= 0.0 ? opts.zero_threshold : default_zero_threshold(opts.t);
  Vector logs = Vector::Zero(2 * d);
  s.n_steps = run(opts.t, [&](const Vector& r, double elapsed, long i, long n) {
    logs += r.array().log().matrix();
    const long every = std::max(1L, n / kTailPoints);
    if (i % every == 0 || i == n) {
      Vector sorted = logs;
      std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
      s.tail.push_back(upper_half(sorted) / elapsed);
    }
  });
  finish(s, logs, opts.t);
  return s;
}

double sum_positive(const LyapunovSpectrum& s) {
  double sum = 0.0;
  for (double e : s.exponents) {
    if (e > s.zero_threshold) sum += e;
  }
  return sum;
}

double smallest_positive(const LyapunovSpectrum& s) {
  double best = std::numeric_limits<double>::infinity();
  for (double e : s.exponents) {
    if (e > s.zero_threshold) best = std::min(best, e);
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::kNoPositiveExponent, "no exponent above the zero threshold " +
                                                    std::to_string(s.zero_threshold));
  }
  return best;
}

double sum_upper_half(const LyapunovSpectrum& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.exponents.size() / 2; ++i) sum += s.exponents[i];
  return sum;
}

double pairing_defect(const LyapunovSpectrum& s) {
  double worst = 0.0;
  const std::size_t n = s.exponents.size();
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(s.exponents[i] + s.exponents[n - 1 - i]));
  return worst;
}

SubspaceEstimate unstable_space_estimate(std::span<const SympBlockMat> cocycle, int k, long n,
                                         std::uint64_t seed, double gap_tol) {
  check_cocycle(cocycle);
  const int d = cocycle.front().dim();
  const long len = static_cast<long>(cocycle.size());
  if (k < 1 || k > 2 * d) throw Error(ErrorCode::kInvalidArgument, "frame size must be in [1, 2d]");
  if (n < len) throw Error(ErrorCode::kInvalidArgument, "need at least one full cycle");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix f(2 * d, k);
  for (Eigen::Index j = 0; j < f.cols(); ++j)
    for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, j) = normal(rng);
  qr_in_place(f);

  // Compare against the frame a whole number of cycles before the end.
  const long cycles_back = std::max(1L, (n / 10) / len);
  const long checkpoint = n - cycles_back * len;
  Matrix earlier;
  for (long i = 0; i < n; ++i) {
    if (i == checkpoint) earlier = f;
    f = cocycle[static_cast<std::size_t>(i % len)].full() * f;
    qr_in_place(f);
  }
  if (earlier.size() == 0) earlier = f;

  SubspaceEstimate out;
  out.frame = f;
  out.which = Which::kUnstable;
  out.residual = symgeo::subspace_distance(earlier, f);
  if (!(out.residual <= gap_tol)) {
    throw PartialResultError<SubspaceEstimate>(
        ErrorCode::kNoGap, "frame did not settle: residual " + std::to_string(out.residual), out);
  }
  return out;
}

std::vector<SympBlockMat> reversed_inverse(std::span<const SympBlockMat> cocycle) {
  std::vector<SympBlockMat> out;
  out.reserve(cocycle.size());
  for (auto it = cocycle.rbegin(); it != cocycle.rend(); ++it) out.push_back(it->symplectic_inverse());
  return out;
}

SubspaceEstimate stable_space_estimate(std::span<const SympBlockMat> cocycle, int k, long n,
                                       std::uint64_t seed, double gap_tol) {
  const auto rev = reversed_inverse(cocycle);
  try {
    SubspaceEstimate e = unstable_space_estimate(rev, k, n, seed, gap_tol);
    e.which = Which::kStable;
    return e;
  } catch (const PartialResultError<SubspaceEstimate>& e) {
    SubspaceEstimate p = e.partial();
    p.which = Which::kStable;
    throw PartialResultError<SubspaceEstimate>(e.code(), e.what(), p);
  }
}

double cocycle_bound_constant(std::span<const SympBlockMat> cocycle) {
  check_cocycle(cocycle);
  double c = 0.0;
  for (const auto& m : cocycle) {
    Eigen::JacobiSVD<Matrix> svd(m.full());
    const Vector& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0)) throw Error(ErrorCode::kDegenerateCocycle, "singular cocycle element");
    c = std::max({c, sv(0), 1.0 / sv(sv.size() - 1)});
  }
  return c;
}

WeightedOrbitMeasure WeightedOrbitMeasure::uniform(std::size_t n) {
  return {normalized_weights({}, n)};
}

WeightedOrbitMeasure WeightedOrbitMeasure::trapezoid(std::size_t n) {
  if (n <= 2) return uniform(n);
  std::vector<double> w(n, 1.0);
  w.front() = w.back() = 0.5;
  return {normalized_weights(w, n)};
}

WeightedOrbitMeasure WeightedOrbitMeasure::from_weights(std::span<const double> w) {
  return {normalized_weights(w, w.size())};
}

double birkhoff_average(std::span<const double> values, const WeightedOrbitMeasure& mu) {
  if (values.size() != mu.weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "observable and measure differ in length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += mu.weights[i] * values[i];
  return s;
}

double birkhoff_average(const std::function<double(std::size_t)>& observable, const WeightedOrbitMeasure& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.weights.size(); ++i) s += mu.weights[i] * observable(i);
  return s;
}

namespace {
BoundCheck make_check(double lhs, double rhs, double tol) {
  BoundCheck b;
  b.lhs = lhs;
  b.rhs = rhs;
  b.slack = rhs - lhs;
  b.holds = b.slack >= -tol;
  return b;
}

void require_inputs(const LyapunovSpectrum& s, double c, double dist) {
  if (s.exponents.empty() || s.exponents.size() % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "spectrum must have even, nonzero size");
  }
  if (!(c > 0.0) || !(dist >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "need C > 0 and dist >= 0");
}
}  // namespace

BoundCheck general_bound_check_1d(const LyapunovSpectrum& s, double c, double dist_average, double tol) {
  require_inputs(s, c, dist_average);
  if (s.exponents.size() != 2) throw Error(ErrorCode::kDimensionMismatch, "1-d check needs two exponents");
  return make_check(s.exponents.front() - s.exponents.back(), std::log1p(c * c * dist_average), tol);
}

BoundCheck general_bound_check_dd(const LyapunovSpectrum& s, double c, double dist_average, double tol) {
  require_inputs(s, c, dist_average);
  const std::size_t d = s.exponents.size() / 2;
  double up = 0.0, down = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    up += s.exponents[i];
    down += s.exponents[d + i];
  }
  return make_check(up - down, static_cast<double>(d) * std::log1p((c * c + 1.0) * dist_average), tol);
}

}  // namespace twistgreen::lyap
