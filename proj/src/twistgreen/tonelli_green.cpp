#include <algorithm>
#include <cmath>

#include "twistgreen/errors.hpp"
#include "twistgreen/tonelli.hpp"
#include "twistgreen/weights.hpp"

namespace twistgreen::tonelli {

namespace {

constexpr double kRenorm = 0.5;

VariationalFrame vertical(int d) { return symgeo::LagrangianFrame::vertical(d).columns(); }

SymMat graph_of(const VariationalFrame& f) { return symgeo::LagrangianFrame(f).graph_matrix(); }

double mismatch(const FlowState& a, const FlowState& b) {
  return std::max((a.q - b.q).cwiseAbs().maxCoeff(), (a.p - b.p).cwiseAbs().maxCoeff());
}

struct Graphs {
  SymMat u, s;
  double mismatch = 0.0;
};

Graphs graphs_at(const TonelliHamiltonian& h, const FlowState& x, double t, const FlowOptions& opts) {
  const int d = h.dim();
  Graphs g;
  const FlowState y = flow_step(h, x, -t, opts);
  const auto fwd = transport_span(h, y, vertical(d), t, kRenorm, opts);
  g.u = graph_of(fwd.second);
  const FlowState z = flow_step(h, x, t, opts);
  const auto bwd = transport_span(h, z, vertical(d), -t, kRenorm, opts);
  g.s = graph_of(bwd.second);
  g.mismatch = std::max(mismatch(fwd.first, x), mismatch(bwd.first, x));
  return g;
}

// Householder QR with a nonnegative diagonal of R.
std::pair<Matrix, Vector> positive_qr(const Matrix& f) {
  Eigen::HouseholderQR<Matrix> qr(f);
  Matrix q = qr.householderQ() * Matrix::Identity(f.rows(), f.cols());
  Vector r = qr.matrixQR().diagonal().head(f.cols());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r(i) < 0.0) {
      r(i) = -r(i);
      q.col(i) = -q.col(i);
    }
  }
  return {std::move(q), std::move(r)};
}

Vector five_point_weights(double h) {
  Vector w(5);
  w << 1.0, -8.0, 0.0, 8.0, -1.0;
  return w / (12.0 * h);
}

void require_path(const GreenFlowPath& path, std::size_t min_samples) {
  if (path.samples.size() < min_samples) {
    throw Error(ErrorCode::kInvalidArgument,
                "path needs at least " + std::to_string(min_samples) + " samples");
  }
  if (min_samples >= 5 && !(path.dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "path spacing must be > 0");
}

}  // namespace

GreenFlowPoint compute_green_bundles_flow(const TonelliHamiltonian& h, const FlowState& x, double t_warm,
                                          double tol, const FlowOptions& opts) {
  if (!(t_warm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "warm-up time must be > 0");
  const Graphs full = graphs_at(h, x, t_warm, opts);
  const Graphs half = graphs_at(h, x, 0.5 * t_warm, opts);
  GreenFlowPoint out;
  out.u = full.u;
  out.s = full.s;
  out.estimate = (full.u - half.u).norm() + (full.s - half.s).norm();
  out.orbit_mismatch = full.mismatch;
  if (!(out.estimate <= tol)) {
    throw PartialResultError<GreenFlowPoint>(
        ErrorCode::kNonConvergence, "flow Green bundles not converged: estimate " + std::to_string(out.estimate),
        out);
  }
  return out;
}

std::pair<SymMat, SymMat> finite_time_green(const TonelliHamiltonian& h, const FlowState& x, double t,
                                            const FlowOptions& opts) {
  if (!(t > 0.0)) throw Error(ErrorCode::kInvalidArgument, "time must be > 0");
  Graphs g = graphs_at(h, x, t, opts);
  return {std::move(g.u), std::move(g.s)};
}

GreenFlowPath green_bundles_along_orbit(const TonelliHamiltonian& h, const FlowState& x0, double window,
                                        int samples, double t_warm, const FlowOptions& opts) {
  if (samples < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  if (!(window >= 0.0) || (samples == 1 && window != 0.0) || (samples > 1 && !(window > 0.0))) {
    throw Error(ErrorCode::kInvalidArgument, "window must be > 0 for several samples and 0 for one");
  }
  if (!(t_warm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "warm-up time must be > 0");
  const int d = h.dim();
  GreenFlowPath path;
  path.dt = samples > 1 ? window / (samples - 1) : 0.0;
  const long sub = std::max(1L, static_cast<long>(std::ceil(path.dt / kRenorm)));
  const double h_sub = path.dt / static_cast<double>(sub);

  // Forward sweep: G+ and the carried infinitesimal orbit.
  auto [x, f] = transport_span(h, flow_step(h, x0, -t_warm, opts), vertical(d), t_warm, kRenorm, opts);
  double log_scale = 0.0;
  path.samples.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    GreenFlowSample s;
    s.t = j * path.dt;
    s.x = x;
    s.u = graph_of(f);
    s.u_frame = f;
    s.u_log_scale = log_scale;
    path.samples.push_back(std::move(s));
    if (j + 1 == samples) break;
    for (long i = 0; i < sub; ++i) {
      auto next = variational_step(h, x, f, h_sub, opts);
      auto [q, r] = positive_qr(next.second);
      x = std::move(next.first);
      f = std::move(q);
      log_scale += std::log(r(0));
    }
  }

  // Backward sweep: G- from the vertical beyond the window.
  const FlowState z = flow_step(h, x0, window + t_warm, opts);
  auto [y, g] = transport_span(h, z, vertical(d), -t_warm, kRenorm, opts);
  for (int j = samples - 1; j >= 0; --j) {
    GreenFlowSample& s = path.samples[static_cast<std::size_t>(j)];
    s.s = graph_of(g);
    path.orbit_mismatch = std::max(path.orbit_mismatch, mismatch(y, s.x));
    if (j == 0) break;
    for (long i = 0; i < sub; ++i) {
      auto prev = variational_step(h, y, g, -h_sub, opts);
      y = std::move(prev.first);
      g = positive_qr(prev.second).first;
    }
  }
  return path;
}

std::vector<double> riccati_residual(const TonelliHamiltonian& h, const GreenFlowPath& path, bool use_upper) {
  require_path(path, 5);
  const Vector w = five_point_weights(path.dt);
  const auto& smp = path.samples;
  std::vector<double> out;
  for (std::size_t j = 2; j + 2 < smp.size(); ++j) {
    auto pick = [&](std::size_t i) -> const Matrix& { return use_upper ? smp[i].u.matrix() : smp[i].s.matrix(); };
    Matrix gdot = Matrix::Zero(h.dim(), h.dim());
    for (int o = 0; o < 5; ++o) gdot += w(o) * pick(j + o - 2);
    const Matrix& g = pick(j);
    const Vector& q = smp[j].x.q;
    const Vector& p = smp[j].x.p;
    const Matrix hqp = h.hqp(q, p);
    const Matrix r = gdot + g * h.hpp(q, p) * g + g * hqp.transpose() + hqp * g + h.hqq(q, p);
    out.push_back(SymMat::symmetrized(r).norm());
  }
  return out;
}

std::vector<WronskianRow> lemma9_check(const TonelliHamiltonian& h, const GreenFlowPath& path) {
  require_path(path, 5);
  const int d = h.dim();
  const Vector w = five_point_weights(path.dt);
  const auto& smp = path.samples;
  std::vector<WronskianRow> out;
  for (std::size_t j = 2; j + 2 < smp.size(); ++j) {
    double fd = 0.0;
    for (int o = 0; o < 5; ++o) {
      const GreenFlowSample& s = smp[j + o - 2];
      const Vector dq = std::exp(s.u_log_scale - smp[j].u_log_scale) * s.u_frame.col(0).head(d);
      fd += w(o) * dq.dot((s.u - s.s).matrix() * dq);
    }
    const GreenFlowSample& s = smp[j];
    const Vector dq = s.u_frame.col(0).head(d);
    const Vector gap = (s.u - s.s).matrix() * dq;
    WronskianRow row;
    row.t = s.t;
    row.fd_derivative = fd;
    row.quadratic = gap.dot(h.hpp(s.x.q, s.x.p) * gap);
    out.push_back(row);
  }
  return out;
}

double theorem1_sum(const TonelliHamiltonian& h, const GreenFlowPath& path, std::span<const double> weights) {
  const auto w = normalized_weights(weights, path.samples.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const GreenFlowSample& s = path.samples[i];
    sum += w[i] * (h.hpp(s.x.q, s.x.p) * (s.u - s.s).matrix()).trace();
  }
  return 0.5 * sum;
}

FlowLowerBound theorem3_bound(const TonelliHamiltonian& h, const GreenFlowPath& path,
                              std::span<const double> weights, double zero_tol) {
  const auto w = normalized_weights(weights, path.samples.size());
  FlowLowerBound out;
  bool any_positive = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const GreenFlowSample& s = path.samples[i];
    double qp = 0.0;
    try {
      qp = symgeo::q_plus(s.u - s.s, zero_tol);
      any_positive = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoPositiveEigenvalue) throw;
    }
    const Matrix hpp = h.hpp(s.x.q, s.x.p);
    out.bound += w[i] * symgeo::conorm(hpp) * qp;
    out.bound_qplus_hpp += w[i] * symgeo::q_plus(SymMat::symmetrized(hpp)) * qp;
  }
  if (!any_positive) {
    throw Error(ErrorCode::kNoPositiveEigenvalue, "U - S has no positive eigenvalue on the sampled orbit");
  }
  out.bound *= 0.5;
  out.bound_qplus_hpp *= 0.5;
  return out;
}

}  // namespace twistgreen::tonelli
