#include "twistgreen/twistgreen.h"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twistgreen/errors.hpp"
#include "twistgreen/greenbundle.hpp"
#include "twistgreen/lyap.hpp"
#include "twistgreen/runner/runner.hpp"
#include "twistgreen/tonelli.hpp"
#include "twistgreen/twistmap.hpp"
#include "twistgreen/version.hpp"

using namespace twistgreen;

struct tg_result {
  runner::RunResult result;
};

struct tg_twist {
  std::shared_ptr<const twistmap::GeneratingFunction> gf;
};

struct tg_orbit {
  twistmap::PeriodicConfiguration config;
  twistmap::Certificate certificate;
  double action = 0.0;
};

struct tg_green {
  greenbundle::GreenPair pair;
  int dim = 0;
};

struct tg_hamiltonian {
  std::shared_ptr<const tonelli::TonelliHamiltonian> h;
};

namespace {

thread_local std::string g_last_error;

tg_status fail(tg_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

tg_status from_error(const Error& e) { return fail(static_cast<tg_status>(e.code()), e.what()); }

template <class F>
tg_status guard(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::bad_alloc&) {
    return fail(TG_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TG_INTERNAL, e.what());
  } catch (...) {
    return fail(TG_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

Vector to_vector(const double* x, int n) { return Eigen::Map<const Vector>(x, n); }

void write_matrix(const Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  }
}

TrigPolynomial make_potential(int dim, std::size_t n_terms, const int* waves, const double* amplitudes,
                              const double* phases) {
  require(dim >= 1, "dim must be >= 1");
  require(n_terms == 0 || (waves && amplitudes), "terms need waves and amplitudes");
  std::vector<TrigTerm> terms(n_terms);
  for (std::size_t i = 0; i < n_terms; ++i) {
    terms[i].wave.assign(waves + i * static_cast<std::size_t>(dim), waves + (i + 1) * static_cast<std::size_t>(dim));
    terms[i].amplitude = amplitudes[i];
    terms[i].phase = phases ? phases[i] : 0.0;
  }
  return TrigPolynomial(dim, std::move(terms));
}

Vector rotation_vector(const int* rotation, int dim) {
  Vector m(dim);
  for (int i = 0; i < dim; ++i) m(i) = rotation[i];
  return m;
}

}  // namespace

extern "C" {

const char* tg_version(void) { return kVersion; }

const char* tg_status_string(tg_status status) {
  if (status == TG_OK) return "Ok";
  if (status < TG_INVALID_ARGUMENT || status > TG_INTERNAL) return "Unknown";
  return to_string(static_cast<ErrorCode>(status));
}

const char* tg_last_error(void) { return g_last_error.c_str(); }

tg_status tg_run(const char* config_json, const char* task, int use_seed, uint64_t seed, int jobs, tg_result** out) {
  return guard([&] {
    require(config_json && task && out, "null argument");
    *out = nullptr;
    runner::json config;
    try {
      config = runner::json::parse(config_json);
    } catch (const runner::json::parse_error& e) {
      throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
    runner::RunOptions opts;
    if (use_seed) opts.seed = seed;
    opts.jobs = jobs;
    auto r = std::make_unique<tg_result>();
    r->result = runner::run(config, runner::parse_task(task), opts);
    *out = r.release();
    return TG_OK;
  });
}

void tg_result_free(tg_result* r) { delete r; }

int tg_result_exit_code(const tg_result* r) { return r ? r->result.exit_code : 2; }

size_t tg_result_artifact_count(const tg_result* r) { return r ? r->result.artifacts.size() : 0; }

const char* tg_result_artifact_name(const tg_result* r, size_t i) {
  if (!r || i >= r->result.artifacts.size()) return nullptr;
  return r->result.artifacts[i].name.c_str();
}

const char* tg_result_artifact_content(const tg_result* r, size_t i) {
  if (!r || i >= r->result.artifacts.size()) return nullptr;
  return r->result.artifacts[i].content.c_str();
}

size_t tg_result_row_count(const tg_result* r) { return r ? r->result.rows.size() : 0; }

tg_status tg_result_row(const tg_result* r, size_t i, tg_row* out) {
  return guard([&] {
    require(r && out, "null argument");
    require(i < r->result.rows.size(), "row index out of range");
    const runner::Row& row = r->result.rows[i];
    out->scenario = row.scenario.c_str();
    out->theorem = row.theorem.c_str();
    out->lhs = row.lhs;
    out->rhs = row.rhs;
    out->slack = row.slack;
    out->tolerance = row.tolerance;
    out->status = row.status == runner::Status::kPass   ? TG_ROW_PASS
                  : row.status == runner::Status::kFail ? TG_ROW_FAIL
                                                        : TG_ROW_SKIPPED;
    out->reason = row.reason.c_str();
    out->n_steps = row.n_steps;
    out->k_used = row.k_used;
    out->wall_ms = row.wall_ms;
    return TG_OK;
  });
}

tg_status tg_twist_standard(double k, tg_twist** out) {
  return guard([&] {
    require(out, "null argument");
    require(std::isfinite(k), "K must be finite");
    *out = new tg_twist{twistmap::standard_family(k)};
    return TG_OK;
  });
}

tg_status tg_twist_trig(int dim, size_t n_terms, const int* waves, const double* amplitudes, const double* phases,
                        tg_twist** out) {
  return guard([&] {
    require(out, "null argument");
    *out = new tg_twist{
        std::make_shared<twistmap::TrigTwistFamily>(make_potential(dim, n_terms, waves, amplitudes, phases))};
    return TG_OK;
  });
}

void tg_twist_free(tg_twist* t) { delete t; }

int tg_twist_dim(const tg_twist* t) { return t ? t->gf->dim() : 0; }

tg_status tg_twist_forward(const tg_twist* t, const double* q, const double* p, double* q_out, double* p_out) {
  return guard([&] {
    require(t && q && p && q_out && p_out, "null argument");
    const int d = t->gf->dim();
    const auto x = twistmap::forward_map(*t->gf, to_vector(q, d), to_vector(p, d));
    Eigen::Map<Vector>(q_out, d) = x.q;
    Eigen::Map<Vector>(p_out, d) = x.p;
    return TG_OK;
  });
}

tg_status tg_minimize(const tg_twist* t, const int* rotation, int period, tg_orbit** out) {
  return guard([&] {
    require(t && rotation && out, "null argument");
    *out = nullptr;
    const Vector m = rotation_vector(rotation, t->gf->dim());
    auto keep = [&](const twistmap::MinimizeResult& r) {
      *out = new tg_orbit{r.config, r.certificate, r.action};
    };
    try {
      keep(twistmap::find_minimizing_periodic_orbit(t->gf, m, period));
    } catch (const PartialResultError<twistmap::MinimizeResult>& e) {
      keep(e.partial());
      return from_error(e);
    }
    return TG_OK;
  });
}

tg_status tg_orbit_from_points(const tg_twist* t, const int* rotation, int period, const double* points,
                               tg_orbit** out) {
  return guard([&] {
    require(t && rotation && points && out, "null argument");
    require(period >= 1, "period must be >= 1");
    const int d = t->gf->dim();
    std::vector<Vector> pts;
    for (int n = 0; n < period; ++n) pts.push_back(to_vector(points + static_cast<std::ptrdiff_t>(n) * d, d));
    auto c = twistmap::make_periodic(rotation_vector(rotation, d), std::move(pts));
    auto cert = twistmap::certify(t->gf, c);
    const double a = twistmap::periodic_action(*t->gf, c);
    *out = new tg_orbit{std::move(c), std::move(cert), a};
    return TG_OK;
  });
}

void tg_orbit_free(tg_orbit* o) { delete o; }

int tg_orbit_period(const tg_orbit* o) { return o ? o->config.period : 0; }

int tg_orbit_certified(const tg_orbit* o) { return o && o->certificate.certified ? 1 : 0; }

double tg_orbit_residual(const tg_orbit* o) { return o ? o->certificate.residual : NAN; }

double tg_orbit_action(const tg_orbit* o) { return o ? o->action : NAN; }

tg_status tg_orbit_points(const tg_orbit* o, double* points) {
  return guard([&] {
    require(o && points, "null argument");
    const int d = o->config.dim();
    for (int n = 0; n < o->config.period; ++n) {
      Eigen::Map<Vector>(points + static_cast<std::ptrdiff_t>(n) * d, d) = o->config.points[n];
    }
    return TG_OK;
  });
}

tg_status tg_green_periodic(const tg_twist* t, const tg_orbit* o, int k_max, double tol, tg_green** out) {
  return guard([&] {
    require(t && o && out, "null argument");
    *out = nullptr;
    const int d = t->gf->dim();
    try {
      *out = new tg_green{greenbundle::compute_green_bundles_periodic(*t->gf, o->config, {k_max, tol}), d};
    } catch (const PartialResultError<greenbundle::GreenPair>& e) {
      *out = new tg_green{e.partial(), d};
      return from_error(e);
    }
    return TG_OK;
  });
}

void tg_green_free(tg_green* g) { delete g; }

size_t tg_green_size(const tg_green* g) { return g ? g->pair.points.size() : 0; }

int tg_green_k_used(const tg_green* g) { return g ? g->pair.k_used : 0; }

int tg_green_converged(const tg_green* g) { return g && g->pair.converged ? 1 : 0; }

tg_status tg_green_slopes(const tg_green* g, size_t i, double* s_minus, double* s_plus) {
  return guard([&] {
    require(g && s_minus && s_plus, "null argument");
    require(i < g->pair.points.size(), "point index out of range");
    write_matrix(g->pair.points[i].s_minus.matrix(), s_minus);
    write_matrix(g->pair.points[i].s_plus.matrix(), s_plus);
    return TG_OK;
  });
}

tg_status tg_green_exponent_sum(const tg_green* g, double* out) {
  return guard([&] {
    require(g && out, "null argument");
    *out = greenbundle::theorem2_sum(g->pair);
    return TG_OK;
  });
}

tg_status tg_green_lower_bound(const tg_green* g, double* bound_qplus, double* bound_conorm) {
  return guard([&] {
    require(g && bound_qplus && bound_conorm, "null argument");
    const auto lb = greenbundle::theorem4_bound(g->pair);
    *bound_qplus = lb.bound_qplus;
    *bound_conorm = lb.bound_conorm;
    return TG_OK;
  });
}

tg_status tg_lyapunov_periodic(const tg_twist* t, const tg_orbit* o, long n, long transient, double zero_threshold,
                               double* exponents) {
  return guard([&] {
    require(t && o && exponents, "null argument");
    std::vector<symgeo::SympBlockMat> cocycle;
    for (long k = 0; k < o->config.period; ++k) {
      cocycle.push_back(twistmap::tangent_map(*t->gf, o->config.point(k), o->config.point(k + 1)));
    }
    lyap::MapSpectrumOptions mo;
    mo.n = n;
    mo.transient = transient;
    mo.zero_threshold = zero_threshold;
    const auto s = lyap::lyapunov_spectrum_map(cocycle, mo);
    std::copy(s.exponents.begin(), s.exponents.end(), exponents);
    return TG_OK;
  });
}

tg_status tg_hamiltonian_pendulum(double c, tg_hamiltonian** out) {
  return guard([&] {
    require(out, "null argument");
    require(c > 0.0 && std::isfinite(c), "scale must be > 0");
    *out = new tg_hamiltonian{tonelli::pendulum(c)};
    return TG_OK;
  });
}

tg_status tg_hamiltonian_flat(int dim, tg_hamiltonian** out) {
  return guard([&] {
    require(out, "null argument");
    require(dim >= 1, "dim must be >= 1");
    *out = new tg_hamiltonian{tonelli::flat(dim)};
    return TG_OK;
  });
}

tg_status tg_hamiltonian_mechanical(int dim, size_t n_terms, const int* waves, const double* amplitudes,
                                    const double* phases, tg_hamiltonian** out) {
  return guard([&] {
    require(out, "null argument");
    *out = new tg_hamiltonian{
        std::make_shared<tonelli::MechanicalHamiltonian>(make_potential(dim, n_terms, waves, amplitudes, phases))};
    return TG_OK;
  });
}

void tg_hamiltonian_free(tg_hamiltonian* h) { delete h; }

int tg_hamiltonian_dim(const tg_hamiltonian* h) { return h ? h->h->dim() : 0; }

tg_status tg_green_flow(const tg_hamiltonian* h, const double* q, const double* p, double t_warm, double tol,
                        double* s, double* u, double* estimate) {
  return guard([&] {
    require(h && q && p && s && u && estimate, "null argument");
    const int d = h->h->dim();
    const tonelli::FlowState x{to_vector(q, d), to_vector(p, d), 0.0};
    auto write = [&](const tonelli::GreenFlowPoint& g) {
      write_matrix(g.s.matrix(), s);
      write_matrix(g.u.matrix(), u);
      *estimate = g.estimate;
    };
    try {
      write(tonelli::compute_green_bundles_flow(*h->h, x, t_warm, tol));
    } catch (const PartialResultError<tonelli::GreenFlowPoint>& e) {
      write(e.partial());
      return from_error(e);
    }
    return TG_OK;
  });
}

tg_status tg_lyapunov_flow(const tg_hamiltonian* h, const double* q, const double* p, double t, double transient,
                           double* exponents) {
  return guard([&] {
    require(h && q && p && exponents, "null argument");
    const int d = h->h->dim();
    lyap::FlowSpectrumOptions fo;
    fo.t = t;
    fo.transient = transient;
    const auto spec = lyap::lyapunov_spectrum_flow(*h->h, {to_vector(q, d), to_vector(p, d), 0.0}, fo);
    std::copy(spec.exponents.begin(), spec.exponents.end(), exponents);
    return TG_OK;
  });
}

tg_status tg_flow_exponent_sum(const tg_hamiltonian* h, const double* q, const double* p, double window, int samples,
                               double t_warm, double* out) {
  return guard([&] {
    require(h && q && p && out, "null argument");
    const int d = h->h->dim();
    const auto path =
        tonelli::green_bundles_along_orbit(*h->h, {to_vector(q, d), to_vector(p, d), 0.0}, window, samples, t_warm);
    *out = tonelli::theorem1_sum(*h->h, path,
                                 lyap::WeightedOrbitMeasure::trapezoid(path.samples.size()).weights);
    return TG_OK;
  });
}

}  // extern "C"
