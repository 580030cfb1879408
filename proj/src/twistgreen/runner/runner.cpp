#include "twistgreen/runner/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <thread>

#include "twistgreen/errors.hpp"
#include "twistgreen/greenbundle.hpp"
#include "twistgreen/lyap.hpp"
#include "twistgreen/tonelli.hpp"
#include "twistgreen/twistmap.hpp"
#include "twistgreen/version.hpp"

namespace twistgreen::runner {

namespace {

using greenbundle::GreenPair;
using symgeo::SympBlockMat;
using twistmap::GeneratingFunction;
using twistmap::PeriodicConfiguration;

// Fixed check tolerances; the configurable ones live in Numerics.
constexpr double kPairingTol = 1e-6;
constexpr double kInclusionTol = 1e-5;
constexpr double kWronskianTol = 1e-6;
constexpr double kWronskianFloor = 1e-8;
constexpr double kRiccatiTol = 1e-6;
// Periodic cocycles are exact, so the zero band can be much narrower than
// the generic 5 / sqrt(n).
constexpr double kPeriodicZeroThreshold = 1e-4;

constexpr const char* kZeroExponents = "hypothesis fails: zero exponents";

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), last_(std::chrono::steady_clock::now()) {}

  double lap() {
    if (!enabled_) return 0.0;
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point last_;
};

json vec_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v(i)));
  return out;
}

json mat_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_json(m.row(i).transpose()));
  return out;
}

json doubles_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

long round_up(long n, long period) {
  if (n <= 0) return 0;
  return ((n + period - 1) / period) * period;
}

std::shared_ptr<const GeneratingFunction> make_twist(const SystemSpec& s) {
  return std::make_shared<twistmap::TrigTwistFamily>(s.potential);
}

std::shared_ptr<const tonelli::TonelliHamiltonian> make_hamiltonian(const SystemSpec& s) {
  if (s.family == "pendulum") return tonelli::pendulum(s.scale);
  if (s.family == "flat") return tonelli::flat(s.dim);
  return std::make_shared<tonelli::MechanicalHamiltonian>(s.potential);
}

tonelli::FlowOptions flow_options(const Numerics& n) {
  tonelli::FlowOptions f;
  f.integrator = n.integrator == "splitting" ? tonelli::Integrator::kSplitting : tonelli::Integrator::kAdaptive;
  f.abs_tol = n.abs_tol;
  f.rel_tol = n.rel_tol;
  f.splitting_dt = n.splitting_dt;
  return f;
}

std::string describe(const std::exception& e) { return e.what(); }

struct TwistOrbit {
  PeriodicConfiguration config;
  twistmap::Certificate certificate;
  double action = 0.0;
  std::string termination;
  int iterations = 0;
};

TwistOrbit obtain_orbit(const std::shared_ptr<const GeneratingFunction>& gf, const OrbitSpec& o) {
  TwistOrbit out;
  if (o.type == OrbitType::kPeriodic) {
    twistmap::MinimizeResult r;
    try {
      r = twistmap::find_minimizing_periodic_orbit(gf, o.rotation, o.period, o.points);
    } catch (const PartialResultError<twistmap::MinimizeResult>& e) {
      r = e.partial();
    }
    out.config = std::move(r.config);
    out.certificate = std::move(r.certificate);
    out.action = r.action;
    out.termination = std::move(r.termination);
    out.iterations = r.iterations;
  } else {
    out.config = twistmap::make_periodic(o.rotation, *o.points);
    out.certificate = twistmap::certify(gf, out.config);
    out.action = twistmap::periodic_action(*gf, out.config);
    out.termination = "given";
  }
  return out;
}

json certificate_json(const twistmap::Certificate& c) {
  return json{
      {"residual", number_or_null(c.residual)},
      {"min_eigenvalue", number_or_null(c.min_eigenvalue)},
      {"kernel_dim", c.kernel_dim},
      {"semidefinite", c.semidefinite},
      {"segment_points", c.segment_points},
      {"segment_positive_definite", c.segment_positive_definite},
      {"certified", c.certified},
      {"reason", c.reason},
  };
}

json orbit_json(const TwistOrbit& o) {
  json pts = json::array();
  for (const Vector& q : o.config.points) pts.push_back(vec_json(q));
  return json{
      {"rotation", vec_json(o.config.rotation)},
      {"period", o.config.period},
      {"points", pts},
      {"action", number_or_null(o.action)},
      {"termination", o.termination},
      {"iterations", o.iterations},
      {"certificate", certificate_json(o.certificate)},
  };
}

json spectrum_json(const lyap::LyapunovSpectrum& s) {
  return json{
      {"exponents", doubles_json(s.exponents)},
      {"n_steps", s.n_steps},
      {"band", number_or_null(s.band)},
      {"zero_threshold", number_or_null(s.zero_threshold)},
      {"sum_positive", number_or_null(lyap::sum_positive(s))},
      {"pairing_defect", number_or_null(lyap::pairing_defect(s))},
  };
}

json green_pair_json(const GreenPair& g) {
  return json{
      {"k_used", g.k_used},
      {"final_delta", number_or_null(g.final_delta)},
      {"converged", g.converged},
  };
}

std::vector<SympBlockMat> periodic_cocycle(const GeneratingFunction& gf, const PeriodicConfiguration& c) {
  std::vector<SympBlockMat> out;
  out.reserve(static_cast<std::size_t>(c.period));
  for (long n = 0; n < c.period; ++n) out.push_back(twistmap::tangent_map(gf, c.point(n), c.point(n + 1)));
  return out;
}

lyap::MapSpectrumOptions periodic_spectrum_options(const Numerics& nm, long period) {
  lyap::MapSpectrumOptions mo;
  mo.n = std::max(round_up(nm.lyap_n, period), period);
  mo.renorm_every = nm.renorm_every;
  mo.transient = round_up(nm.lyap_transient, period);
  mo.zero_threshold = nm.zero_threshold.value_or(kPeriodicZeroThreshold);
  return mo;
}

bool has_positive(const lyap::LyapunovSpectrum& s) {
  return !s.exponents.empty() && s.exponents.front() > s.zero_threshold;
}

// E^u pushed forward and E^s pulled back to every phase of the cycle.
struct Splitting {
  std::vector<Matrix> unstable, stable;
};

Splitting oseledets_splitting(const std::vector<SympBlockMat>& cocycle, int d, long n, std::uint64_t seed,
                              double gap_tol) {
  const std::size_t len = cocycle.size();
  Splitting out;
  out.unstable.resize(len);
  out.stable.resize(len);
  out.unstable[0] = lyap::unstable_space_estimate(cocycle, d, n, seed, gap_tol).frame;
  for (std::size_t j = 0; j + 1 < len; ++j) {
    out.unstable[j + 1] = symgeo::orthonormal_basis(cocycle[j].full() * out.unstable[j]);
  }
  out.stable[0] = lyap::stable_space_estimate(cocycle, d, n, seed + 1, gap_tol).frame;
  Matrix next = out.stable[0];
  for (std::size_t j = len; j-- > 1;) {
    out.stable[j] = symgeo::orthonormal_basis(cocycle[j].symplectic_inverse().full() * next);
    next = out.stable[j];
  }
  return out;
}

ScenarioResult verify_twist(const Scenario& s) {
  const Numerics& nm = s.numerics;
  const std::string& id = s.id;
  ScenarioResult out;
  out.diagnostics = json::object();
  Stopwatch sw(nm.record_timing);
  auto add = [&](Row r) {
    r.wall_ms = sw.lap();
    out.rows.push_back(std::move(r));
  };

  const auto gf = make_twist(s.system);
  TwistOrbit orbit;
  try {
    orbit = obtain_orbit(gf, s.orbit);
  } catch (const std::exception& e) {
    add(failed_row(id, "certification", describe(e)));
    return out;
  }
  out.diagnostics["orbit"] = orbit_json(orbit);
  {
    Row r = bound_row(id, "certification", orbit.certificate.certified ? 0.0 : 1.0, 0.0, 0.0);
    r.reason = orbit.certificate.reason;
    add(std::move(r));
  }

  const PeriodicConfiguration& c = orbit.config;
  const int d = c.dim();
  std::vector<SympBlockMat> cocycle;
  std::optional<lyap::LyapunovSpectrum> spec;
  std::string spec_error;
  const auto mo = periodic_spectrum_options(nm, c.period);
  try {
    cocycle = periodic_cocycle(*gf, c);
    spec = lyap::lyapunov_spectrum_map(cocycle, mo);
    out.diagnostics["spectrum"] = spectrum_json(*spec);
  } catch (const std::exception& e) {
    spec_error = describe(e);
  }
  const long n_steps = spec ? spec->n_steps : 0;

  std::optional<GreenPair> green;
  std::string green_error;
  try {
    green = greenbundle::compute_green_bundles_periodic(*gf, c, {nm.periodic_k_max, nm.green_tol});
  } catch (const PartialResultError<GreenPair>& e) {
    green = e.partial();
  } catch (const std::exception& e) {
    green_error = describe(e);
  }
  const long k_used = green ? green->k_used : 0;
  if (green) out.diagnostics["green"] = green_pair_json(*green);

  auto with_steps = [&](Row r, bool uses_spec, bool uses_green) {
    if (uses_spec) r.n_steps = n_steps;
    if (uses_green) r.k_used = k_used;
    return r;
  };
  auto missing = [&](const char* theorem, bool need_spec, bool need_green) -> std::optional<Row> {
    if (need_spec && !spec) return failed_row(id, theorem, spec_error);
    if (need_green && !green) return failed_row(id, theorem, green_error);
    return std::nullopt;
  };

  // Symplectic pairing of the spectrum.
  if (auto m = missing("symplectic-pairing", true, false)) {
    add(*m);
  } else {
    add(with_steps(bound_row(id, "symplectic-pairing", lyap::pairing_defect(*spec), kPairingTol, 0.0), true, false));
  }

  // Monotone chain S_-1 <= S_-2 <= S_- <= S_+ <= S_2 <= S_1.
  if (auto m = missing("green-ordering", false, true)) {
    add(*m);
  } else {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& p : green->points) margin = std::min(margin, greenbundle::ordering_margins(p).min());
    out.diagnostics["ordering_margin"] = number_or_null(margin);
    add(with_steps(bound_row(id, "green-ordering", 0.0, margin, nm.bound_tol), false, true));
  }

  // Exponent sum from the Green bundles against the QR spectrum.
  std::optional<double> t2;
  if (auto m = missing("map-exponent-sum", true, true)) {
    add(*m);
  } else {
    try {
      t2 = greenbundle::theorem2_sum(*green);
      out.diagnostics["theorem2_sum"] = number_or_null(*t2);
      if (green->converged) {
        add(with_steps(equality_row(id, "map-exponent-sum", *t2, lyap::sum_upper_half(*spec), nm.equality_tol),
                       true, true));
      } else {
        // Unconverged iterates give an upper bound: sum_+ must sit in [0, T2_k].
        Row r;
        r.scenario = id;
        r.theorem = "map-exponent-sum";
        r.lhs = lyap::sum_positive(*spec);
        r.rhs = *t2;
        r.tolerance = nm.equality_tol;
        r.slack = std::min(r.lhs, r.rhs - r.lhs);
        r.status = r.slack >= -r.tolerance ? Status::kPass : Status::kFail;
        r.reason = "green iteration not converged after " + std::to_string(green->k_used) +
                   " steps; checked the monotone bracket";
        add(with_steps(std::move(r), true, true));
      }
    } catch (const std::exception& e) {
      add(with_steps(failed_row(id, "map-exponent-sum", describe(e)), true, true));
    }
  }

  const bool hyperbolic = spec && has_positive(*spec);

  // Lower bound by the smallest positive characteristic number of U - S.
  for (const char* theorem : {"map-lower-bound", "map-lower-bound-conorm"}) {
    if (auto m = missing(theorem, true, true)) {
      add(*m);
      continue;
    }
    if (!hyperbolic) {
      add(skipped_row(id, theorem, kZeroExponents));
      continue;
    }
    if (!green->converged) {
      add(with_steps(failed_row(id, theorem, "green bundles not converged"), true, true));
      continue;
    }
    try {
      const auto lb = greenbundle::theorem4_bound(*green);
      const double bound = std::string(theorem) == "map-lower-bound" ? lb.bound_qplus : lb.bound_conorm;
      out.diagnostics["theorem4_c"] = number_or_null(lb.c);
      add(with_steps(bound_row(id, theorem, bound, lyap::smallest_positive(*spec), nm.bound_tol), true, true));
    } catch (const std::exception& e) {
      add(with_steps(failed_row(id, theorem, describe(e)), true, true));
    }
  }

  // Distance between E^s and E^u against the exponent gap, and E^u = G+.
  const char* prop = d == 1 ? "distance-bound-1d" : "distance-bound-dd";
  if (auto m = missing(prop, true, false)) {
    add(*m);
    add(failed_row(id, "oseledets-green-inclusion", spec_error));
    return out;
  }
  if (!hyperbolic) {
    add(skipped_row(id, prop, kZeroExponents));
    add(skipped_row(id, "oseledets-green-inclusion", kZeroExponents));
    return out;
  }
  std::optional<Splitting> split;
  try {
    split = oseledets_splitting(cocycle, d, mo.n, nm.seed, nm.gap_tol);
  } catch (const std::exception& e) {
    add(with_steps(failed_row(id, prop, describe(e)), true, false));
    add(with_steps(failed_row(id, "oseledets-green-inclusion", describe(e)), true, false));
    return out;
  }
  try {
    std::vector<double> dist;
    for (std::size_t j = 0; j < cocycle.size(); ++j) {
      dist.push_back(symgeo::subspace_distance(split->unstable[j], split->stable[j]));
    }
    const double avg = lyap::birkhoff_average(dist, lyap::WeightedOrbitMeasure::uniform(dist.size()));
    const double cb = lyap::cocycle_bound_constant(cocycle);
    const auto check = d == 1 ? lyap::general_bound_check_1d(*spec, cb, avg) : lyap::general_bound_check_dd(*spec, cb, avg);
    out.diagnostics["cocycle_bound"] = number_or_null(cb);
    out.diagnostics["distance_average"] = number_or_null(avg);
    add(with_steps(bound_row(id, prop, check.lhs, check.rhs, nm.bound_tol), true, false));
  } catch (const std::exception& e) {
    add(with_steps(failed_row(id, prop, describe(e)), true, false));
  }

  if (auto m = missing("oseledets-green-inclusion", false, true)) {
    add(*m);
  } else if (!green->converged) {
    add(with_steps(failed_row(id, "oseledets-green-inclusion", "green bundles not converged"), true, true));
  } else {
    try {
      double worst = 0.0;
      for (std::size_t j = 0; j < cocycle.size(); ++j) {
        const auto& p = green->points[j];
        const Matrix gu = symgeo::LagrangianFrame::graph(p.s_plus).columns();
        const Matrix gs = symgeo::LagrangianFrame::graph(p.s_minus).columns();
        worst = std::max(worst, symgeo::subspace_distance(split->unstable[j], gu));
        worst = std::max(worst, symgeo::subspace_distance(split->stable[j], gs));
      }
      add(with_steps(bound_row(id, "oseledets-green-inclusion", worst, kInclusionTol, 0.0), true, true));
    } catch (const std::exception& e) {
      add(with_steps(failed_row(id, "oseledets-green-inclusion", describe(e)), true, true));
    }
  }
  return out;
}

ScenarioResult verify_flow(const Scenario& s) {
  const Numerics& nm = s.numerics;
  const std::string& id = s.id;
  ScenarioResult out;
  out.diagnostics = json::object();
  Stopwatch sw(nm.record_timing);
  auto add = [&](Row r) {
    r.wall_ms = sw.lap();
    out.rows.push_back(std::move(r));
  };

  const auto h = make_hamiltonian(s.system);
  const auto fo = flow_options(nm);
  const tonelli::FlowState x0{s.orbit.q, s.orbit.p, 0.0};

  std::optional<tonelli::GreenFlowPath> path;
  std::string path_error;
  try {
    path = tonelli::green_bundles_along_orbit(*h, x0, s.orbit.window, s.orbit.samples, nm.t_warm, fo);
    out.diagnostics["orbit_mismatch"] = number_or_null(path->orbit_mismatch);
  } catch (const std::exception& e) {
    path_error = describe(e);
  }

  double estimate = std::numeric_limits<double>::quiet_NaN();
  try {
    estimate = tonelli::compute_green_bundles_flow(*h, x0, nm.t_warm, nm.flow_tol, fo).estimate;
  } catch (const PartialResultError<tonelli::GreenFlowPoint>& e) {
    estimate = e.partial().estimate;
  } catch (const std::exception& e) {
    if (path_error.empty()) path_error = describe(e);
    path.reset();
  }
  out.diagnostics["green_estimate"] = number_or_null(estimate);

  std::optional<lyap::LyapunovSpectrum> spec;
  std::string spec_error;
  try {
    lyap::FlowSpectrumOptions lo;
    lo.t = nm.lyap_t;
    lo.renorm_every = nm.flow_renorm;
    lo.transient = nm.t_warm;
    lo.zero_threshold = nm.zero_threshold.value_or(-1.0);
    lo.flow = fo;
    spec = lyap::lyapunov_spectrum_flow(*h, x0, lo);
    out.diagnostics["spectrum"] = spectrum_json(*spec);
  } catch (const std::exception& e) {
    spec_error = describe(e);
  }
  const long n_steps = spec ? spec->n_steps : 0;
  auto with_steps = [&](Row r) {
    r.n_steps = n_steps;
    return r;
  };

  if (!spec) {
    add(failed_row(id, "symplectic-pairing", spec_error));
  } else {
    add(with_steps(bound_row(id, "symplectic-pairing", lyap::pairing_defect(*spec), kPairingTol, 0.0)));
  }

  const std::size_t n_samples = path ? path->samples.size() : 0;
  const auto weights = lyap::WeightedOrbitMeasure::trapezoid(std::max<std::size_t>(n_samples, 1)).weights;
  const double flow_tol = nm.flow_tol + estimate;

  if (!path || !spec) {
    add(failed_row(id, "flow-exponent-sum", path ? spec_error : path_error));
  } else {
    try {
      const double t1 = tonelli::theorem1_sum(*h, *path, weights);
      out.diagnostics["theorem1_sum"] = number_or_null(t1);
      add(with_steps(equality_row(id, "flow-exponent-sum", t1, lyap::sum_positive(*spec), flow_tol)));
    } catch (const std::exception& e) {
      add(with_steps(failed_row(id, "flow-exponent-sum", describe(e))));
    }
  }

  if (!path || !spec) {
    add(failed_row(id, "flow-lower-bound", path ? spec_error : path_error));
  } else if (!has_positive(*spec)) {
    add(with_steps(skipped_row(id, "flow-lower-bound", kZeroExponents)));
  } else {
    try {
      const auto lb = tonelli::theorem3_bound(*h, *path, weights, 4.0 * estimate + nm.bound_tol);
      add(with_steps(bound_row(id, "flow-lower-bound", lb.bound, lyap::smallest_positive(*spec), flow_tol)));
    } catch (const std::exception& e) {
      add(with_steps(failed_row(id, "flow-lower-bound", describe(e))));
    }
  }

  if (s.orbit.samples >= 5) {
    if (!path) {
      add(failed_row(id, "wronskian-derivative", path_error));
      add(failed_row(id, "wronskian-monotone", path_error));
      add(failed_row(id, "riccati-residual", path_error));
      return out;
    }
    try {
      double worst = 0.0;
      double floor = std::numeric_limits<double>::infinity();
      for (const auto& row : tonelli::lemma9_check(*h, *path)) {
        worst = std::max(worst, std::abs(row.fd_derivative - row.quadratic));
        floor = std::min(floor, row.fd_derivative);
      }
      add(bound_row(id, "wronskian-derivative", worst, kWronskianTol, 0.0));
      add(bound_row(id, "wronskian-monotone", -floor, kWronskianFloor, 0.0));
    } catch (const std::exception& e) {
      add(failed_row(id, "wronskian-derivative", describe(e)));
      add(failed_row(id, "wronskian-monotone", describe(e)));
    }
    try {
      double worst = 0.0;
      for (bool upper : {true, false}) {
        for (double r : tonelli::riccati_residual(*h, *path, upper)) worst = std::max(worst, r);
      }
      add(bound_row(id, "riccati-residual", worst, kRiccatiTol, 0.0));
    } catch (const std::exception& e) {
      add(failed_row(id, "riccati-residual", describe(e)));
    }
  }
  return out;
}

void require_verifiable(const Scenario& s) {
  if (s.orbit.type == OrbitType::kSegment) {
    throw Error(ErrorCode::kConfig, "orbit: verify needs a periodic, configuration or point orbit");
  }
}

json report_header(Task task) {
  return json{{"library", kLibraryName}, {"version", kVersion}, {"task", task_name(task)}};
}

json summary_json(const std::vector<Row>& rows) {
  long pass = 0, fail = 0, skipped = 0;
  for (const Row& r : rows) {
    if (r.status == Status::kPass) ++pass;
    if (r.status == Status::kFail) ++fail;
    if (r.status == Status::kSkipped) ++skipped;
  }
  return json{{"rows", rows.size()}, {"pass", pass}, {"fail", fail}, {"skipped", skipped}};
}

int exit_code_of(const std::vector<Row>& rows) {
  for (const Row& r : rows) {
    if (r.status == Status::kFail) return 1;
  }
  return 0;
}

json scenario_json(const Scenario& s, const ScenarioResult& r) {
  json rows = json::array();
  for (const Row& row : r.rows) rows.push_back(row_to_json(row));
  return json{{"id", s.id}, {"resolved", s.resolved}, {"rows", rows}, {"diagnostics", r.diagnostics}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ScenarioResult verify_guarded(const Scenario& s) {
  try {
    return verify_scenario(s);
  } catch (const std::exception& e) {
    ScenarioResult r;
    r.diagnostics = json::object();
    r.rows.push_back(failed_row(s.id, "internal", describe(e)));
    return r;
  }
}

RunResult run_verify(const json& config, const RunOptions& opts) {
  const Scenario s = parse_scenario(config, opts.seed);
  require_verifiable(s);
  const ScenarioResult r = verify_guarded(s);
  RunResult out;
  out.rows = r.rows;
  out.exit_code = exit_code_of(out.rows);
  json report = report_header(Task::kVerify);
  report["config"] = s.resolved;
  report["scenarios"] = json::array({scenario_json(s, r)});
  report["summary"] = summary_json(out.rows);
  report["exit_code"] = out.exit_code;
  out.artifacts.push_back({"report.json", dump(report)});
  out.artifacts.push_back({"report.csv", rows_to_csv(out.rows)});
  return out;
}

RunResult run_scan(const json& config, const RunOptions& opts) {
  std::vector<Scenario> scenarios;
  for (const json& point : expand_scan(config)) {
    scenarios.push_back(parse_scenario(point, opts.seed));
    require_verifiable(scenarios.back());
  }
  std::vector<ScenarioResult> results(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) results[i] = verify_guarded(scenarios[i]);
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.jobs, 1)), scenarios.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RunResult out;
  json entries = json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    out.rows.insert(out.rows.end(), results[i].rows.begin(), results[i].rows.end());
    entries.push_back(scenario_json(scenarios[i], results[i]));
  }
  out.exit_code = exit_code_of(out.rows);
  json report = report_header(Task::kScan);
  json resolved = config;
  json numerics = default_numerics();
  if (config.contains("numerics") && config["numerics"].is_object()) numerics.update(config["numerics"]);
  if (opts.seed) numerics["seed"] = *opts.seed;
  resolved["numerics"] = numerics;
  report["config"] = resolved;
  report["scenarios"] = entries;
  report["summary"] = summary_json(out.rows);
  report["exit_code"] = out.exit_code;
  out.artifacts.push_back({"scan.csv", rows_to_csv(out.rows)});
  out.artifacts.push_back({"report.json", dump(report)});
  return out;
}

json green_twist(const Scenario& s, int& exit_code) {
  const auto gf = make_twist(s.system);
  const Numerics& nm = s.numerics;
  json result = json::object();
  auto points_json = [](const GreenPair& g, const std::function<Vector(long)>& q) {
    json pts = json::array();
    for (const auto& p : g.points) {
      pts.push_back(json{{"index", p.index},
                         {"q", vec_json(q(p.index))},
                         {"s_minus", mat_json(p.s_minus.matrix())},
                         {"s_plus", mat_json(p.s_plus.matrix())}});
    }
    return pts;
  };
  auto fill = [&](const GreenPair& g, const std::function<Vector(long)>& q) {
    result["green"] = green_pair_json(g);
    result["points"] = points_json(g, q);
    if (!g.converged) exit_code = 1;
  };
  if (s.orbit.type == OrbitType::kSegment) {
    const auto seg = twistmap::iterate_orbit(gf, {s.orbit.q, s.orbit.p}, s.orbit.length);
    auto q = [&seg](long n) { return seg.q(n); };
    try {
      fill(greenbundle::compute_green_bundles(seg, {nm.green_k_max, nm.green_tol}), q);
    } catch (const PartialResultError<GreenPair>& e) {
      fill(e.partial(), q);
      result["error"] = describe(e);
    }
    return result;
  }
  const TwistOrbit orbit = obtain_orbit(gf, s.orbit);
  result["orbit"] = orbit_json(orbit);
  if (!orbit.certificate.certified) exit_code = 1;
  auto q = [&orbit](long n) { return orbit.config.point(n); };
  try {
    fill(greenbundle::compute_green_bundles_periodic(*gf, orbit.config, {nm.periodic_k_max, nm.green_tol}), q);
  } catch (const PartialResultError<GreenPair>& e) {
    fill(e.partial(), q);
    result["error"] = describe(e);
  }
  return result;
}

json green_flow(const Scenario& s, int& exit_code) {
  const auto h = make_hamiltonian(s.system);
  const Numerics& nm = s.numerics;
  const auto fo = flow_options(nm);
  const tonelli::FlowState x0{s.orbit.q, s.orbit.p, 0.0};
  json result = json::object();
  try {
    result["estimate"] = number_or_null(tonelli::compute_green_bundles_flow(*h, x0, nm.t_warm, nm.flow_tol, fo).estimate);
  } catch (const PartialResultError<tonelli::GreenFlowPoint>& e) {
    result["estimate"] = number_or_null(e.partial().estimate);
    result["error"] = describe(e);
    exit_code = 1;
  }
  const auto path = tonelli::green_bundles_along_orbit(*h, x0, s.orbit.window, s.orbit.samples, nm.t_warm, fo);
  json samples = json::array();
  for (const auto& smp : path.samples) {
    samples.push_back(json{{"t", smp.t},
                           {"q", vec_json(smp.x.q)},
                           {"p", vec_json(smp.x.p)},
                           {"s", mat_json(smp.s.matrix())},
                           {"u", mat_json(smp.u.matrix())}});
  }
  result["orbit_mismatch"] = number_or_null(path.orbit_mismatch);
  result["samples"] = samples;
  return result;
}

json lyapunov_result(const Scenario& s) {
  const Numerics& nm = s.numerics;
  if (s.system.kind == SystemKind::kHamiltonian) {
    const auto h = make_hamiltonian(s.system);
    lyap::FlowSpectrumOptions lo;
    lo.t = nm.lyap_t;
    lo.renorm_every = nm.flow_renorm;
    lo.transient = nm.t_warm;
    lo.zero_threshold = nm.zero_threshold.value_or(-1.0);
    lo.flow = flow_options(nm);
    return json{{"spectrum", spectrum_json(lyap::lyapunov_spectrum_flow(*h, {s.orbit.q, s.orbit.p, 0.0}, lo))}};
  }
  const auto gf = make_twist(s.system);
  if (s.orbit.type == OrbitType::kSegment) {
    const auto seg = twistmap::iterate_orbit(gf, {s.orbit.q, s.orbit.p}, s.orbit.length);
    std::vector<SympBlockMat> cocycle;
    for (long n = seg.first(); n < seg.last(); ++n) cocycle.push_back(twistmap::tangent_map(*gf, seg.q(n), seg.q(n + 1)));
    lyap::MapSpectrumOptions mo;
    mo.n = static_cast<long>(cocycle.size());
    mo.renorm_every = std::min<long>(nm.renorm_every, mo.n);
    mo.zero_threshold = nm.zero_threshold.value_or(-1.0);
    return json{{"spectrum", spectrum_json(lyap::lyapunov_spectrum_map(cocycle, mo))}};
  }
  const TwistOrbit orbit = obtain_orbit(gf, s.orbit);
  const auto cocycle = periodic_cocycle(*gf, orbit.config);
  const auto spec = lyap::lyapunov_spectrum_map(cocycle, periodic_spectrum_options(nm, orbit.config.period));
  return json{{"orbit", orbit_json(orbit)}, {"spectrum", spectrum_json(spec)}};
}

RunResult run_single(const json& config, Task task, const RunOptions& opts) {
  const Scenario s = parse_scenario(config, opts.seed);
  if (task == Task::kMinimize && s.orbit.type != OrbitType::kPeriodic) {
    throw Error(ErrorCode::kConfig, "orbit: minimize needs a periodic orbit");
  }
  RunResult out;
  json doc = report_header(task);
  doc["config"] = s.resolved;
  json result;
  int code = 0;
  try {
    switch (task) {
      case Task::kGreen:
        result = s.system.kind == SystemKind::kTwist ? green_twist(s, code) : green_flow(s, code);
        break;
      case Task::kLyapunov:
        result = lyapunov_result(s);
        break;
      case Task::kMinimize: {
        const TwistOrbit orbit = obtain_orbit(make_twist(s.system), s.orbit);
        result = orbit_json(orbit);
        if (!orbit.certificate.certified) code = 1;
        break;
      }
      default:
        throw Error(ErrorCode::kInternal, "unexpected task");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    result = json{{"error", describe(e)}};
    code = 1;
  } catch (const std::exception& e) {
    result = json{{"error", describe(e)}};
    code = 1;
  }
  doc["result"] = result;
  doc["exit_code"] = code;
  out.exit_code = code;
  const char* name = task == Task::kGreen ? "green.json" : task == Task::kLyapunov ? "lyapunov.json" : "orbit.json";
  out.artifacts.push_back({name, dump(doc)});
  return out;
}

}  // namespace

const char* task_name(Task t) {
  switch (t) {
    case Task::kVerify:
      return "verify";
    case Task::kScan:
      return "scan";
    case Task::kGreen:
      return "green";
    case Task::kLyapunov:
      return "lyapunov";
    case Task::kMinimize:
      return "minimize";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::kVerify, Task::kScan, Task::kGreen, Task::kLyapunov, Task::kMinimize}) {
    if (name == task_name(t)) return t;
  }
  throw Error(ErrorCode::kConfig, "unknown task '" + name + "'");
}

ScenarioResult verify_scenario(const Scenario& s) {
  require_verifiable(s);
  return s.system.kind == SystemKind::kTwist ? verify_twist(s) : verify_flow(s);
}

RunResult run(const json& config, Task task, const RunOptions& opts) {
  switch (task) {
    case Task::kVerify:
      return run_verify(config, opts);
    case Task::kScan:
      return run_scan(config, opts);
    default:
      return run_single(config, task, opts);
  }
}

}  // namespace twistgreen::runner
