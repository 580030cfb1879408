#include "twistgreen/runner/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "twistgreen/errors.hpp"

namespace twistgreen::runner {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, where + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

const json& need(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& where) {
  const double x = number(v, where);
  if (!(x > 0.0)) fail(where, "must be > 0");
  return x;
}

long integer(const json& v, const std::string& where, long min) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  const long x = v.get<long>();
  if (x < min) fail(where, "must be >= " + std::to_string(min));
  return x;
}

Vector vec(const json& v, const std::string& where, int dim) {
  if (!v.is_array()) fail(where, "expected an array");
  if (dim >= 0 && static_cast<int>(v.size()) != dim) fail(where, "expected " + std::to_string(dim) + " entries");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = number(v[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

Vector int_vec(const json& v, const std::string& where, int dim) {
  if (!v.is_array()) fail(where, "expected an array");
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(where, "expected integers");
  }
  return vec(v, where, dim);
}

std::vector<Vector> points(const json& v, const std::string& where, int dim) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of points");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vec(v[i], where + "[" + std::to_string(i) + "]", dim));
  return out;
}

TrigPolynomial potential(const json& v, const std::string& where, int dim) {
  if (!v.is_array()) fail(where, "expected an array of terms");
  std::vector<TrigTerm> terms;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    only_keys(v[i], w, {"wave", "amplitude", "phase"});
    TrigTerm t;
    const json& wave = need(v[i], "wave", w);
    if (!wave.is_array() || static_cast<int>(wave.size()) != dim) fail(w + ".wave", "needs dim integers");
    for (const auto& e : wave) {
      if (!e.is_number_integer()) fail(w + ".wave", "expected integers");
      t.wave.push_back(e.get<int>());
    }
    t.amplitude = number(need(v[i], "amplitude", w), w + ".amplitude");
    t.phase = v[i].contains("phase") ? number(v[i]["phase"], w + ".phase") : 0.0;
    terms.push_back(std::move(t));
  }
  return TrigPolynomial(dim, std::move(terms));
}

SystemSpec parse_system(const json& s) {
  const std::string w = "system";
  if (!s.is_object()) fail(w, "expected an object");
  const json& kind = need(s, "kind", w);
  const json& family = need(s, "family", w);
  if (!kind.is_string() || !family.is_string()) fail(w, "kind and family must be strings");
  SystemSpec out;
  out.family = family.get<std::string>();
  if (kind == "twist") {
    out.kind = SystemKind::kTwist;
    if (out.family == "standard") {
      only_keys(s, w, {"kind", "family", "K"});
      out.k = number(need(s, "K", w), w + ".K");
      out.dim = 1;
      out.potential = standard_potential(out.k);
    } else if (out.family == "trig") {
      only_keys(s, w, {"kind", "family", "dim", "potential"});
      out.dim = static_cast<int>(integer(need(s, "dim", w), w + ".dim", 1));
      out.potential = potential(need(s, "potential", w), w + ".potential", out.dim);
    } else {
      fail(w + ".family", "twist families are 'standard' and 'trig'");
    }
  } else if (kind == "hamiltonian") {
    out.kind = SystemKind::kHamiltonian;
    if (out.family == "pendulum") {
      only_keys(s, w, {"kind", "family", "scale"});
      out.scale = s.contains("scale") ? positive(s["scale"], w + ".scale") : 1.0;
      out.dim = 1;
    } else if (out.family == "mechanical") {
      only_keys(s, w, {"kind", "family", "dim", "potential"});
      out.dim = static_cast<int>(integer(need(s, "dim", w), w + ".dim", 1));
      out.potential = potential(need(s, "potential", w), w + ".potential", out.dim);
    } else if (out.family == "flat") {
      only_keys(s, w, {"kind", "family", "dim"});
      out.dim = static_cast<int>(integer(need(s, "dim", w), w + ".dim", 1));
    } else {
      fail(w + ".family", "hamiltonian families are 'pendulum', 'mechanical' and 'flat'");
    }
  } else {
    fail(w + ".kind", "expected 'twist' or 'hamiltonian'");
  }
  return out;
}

OrbitSpec parse_orbit(const json& o, const SystemSpec& sys) {
  const std::string w = "orbit";
  if (!o.is_object()) fail(w, "expected an object");
  const json& type = need(o, "type", w);
  if (!type.is_string()) fail(w + ".type", "expected a string");
  const int d = sys.dim;
  OrbitSpec out;
  const bool twist = sys.kind == SystemKind::kTwist;
  if (type == "periodic" || type == "configuration") {
    if (!twist) fail(w + ".type", "periodic and configuration orbits need a twist system");
    out.rotation = int_vec(need(o, "rotation", w), w + ".rotation", d);
    if (type == "periodic") {
      only_keys(o, w, {"type", "rotation", "period", "init"});
      out.type = OrbitType::kPeriodic;
      out.period = static_cast<int>(integer(need(o, "period", w), w + ".period", 1));
      if (o.contains("init")) {
        out.points = points(o["init"], w + ".init", d);
        if (static_cast<int>(out.points->size()) != out.period) fail(w + ".init", "needs one point per period step");
      }
    } else {
      only_keys(o, w, {"type", "rotation", "points"});
      out.type = OrbitType::kConfiguration;
      out.points = points(need(o, "points", w), w + ".points", d);
      out.period = static_cast<int>(out.points->size());
    }
  } else if (type == "segment") {
    if (!twist) fail(w + ".type", "segment orbits need a twist system");
    only_keys(o, w, {"type", "q", "p", "length"});
    out.type = OrbitType::kSegment;
    out.q = vec(need(o, "q", w), w + ".q", d);
    out.p = vec(need(o, "p", w), w + ".p", d);
    out.length = integer(need(o, "length", w), w + ".length", 1);
  } else if (type == "point") {
    if (twist) fail(w + ".type", "point orbits need a hamiltonian system");
    only_keys(o, w, {"type", "q", "p", "window", "samples"});
    out.type = OrbitType::kPoint;
    out.q = vec(need(o, "q", w), w + ".q", d);
    out.p = vec(need(o, "p", w), w + ".p", d);
    out.window = o.contains("window") ? number(o["window"], w + ".window") : 0.0;
    out.samples = o.contains("samples") ? static_cast<int>(integer(o["samples"], w + ".samples", 1)) : 1;
    if (out.window < 0.0) fail(w + ".window", "must be >= 0");
    if ((out.samples == 1) != (out.window == 0.0)) fail(w, "use window 0 with one sample, window > 0 with several");
  } else {
    fail(w + ".type", "expected 'periodic', 'configuration', 'segment' or 'point'");
  }
  return out;
}

Numerics parse_numerics(const json& n) {
  const std::string w = "numerics";
  Numerics out;
  out.green_tol = positive(n["green_tol"], w + ".green_tol");
  out.green_k_max = static_cast<int>(integer(n["green_k_max"], w + ".green_k_max", 1));
  out.periodic_k_max = static_cast<int>(integer(n["periodic_k_max"], w + ".periodic_k_max", 1));
  out.lyap_n = integer(n["lyap_n"], w + ".lyap_n", 1);
  out.lyap_transient = integer(n["lyap_transient"], w + ".lyap_transient", 0);
  out.renorm_every = static_cast<int>(integer(n["renorm_every"], w + ".renorm_every", 1));
  if (out.renorm_every > out.lyap_n) fail(w + ".renorm_every", "must not exceed lyap_n");
  if (!n["zero_threshold"].is_null()) out.zero_threshold = positive(n["zero_threshold"], w + ".zero_threshold");
  out.gap_tol = positive(n["gap_tol"], w + ".gap_tol");
  out.t_warm = positive(n["t_warm"], w + ".t_warm");
  out.lyap_t = positive(n["lyap_t"], w + ".lyap_t");
  out.flow_renorm = positive(n["flow_renorm"], w + ".flow_renorm");
  if (!n["integrator"].is_string()) fail(w + ".integrator", "expected a string");
  out.integrator = n["integrator"].get<std::string>();
  if (out.integrator != "adaptive" && out.integrator != "splitting") {
    fail(w + ".integrator", "expected 'adaptive' or 'splitting'");
  }
  out.abs_tol = positive(n["abs_tol"], w + ".abs_tol");
  out.rel_tol = positive(n["rel_tol"], w + ".rel_tol");
  out.splitting_dt = positive(n["splitting_dt"], w + ".splitting_dt");
  out.equality_tol = positive(n["equality_tol"], w + ".equality_tol");
  out.bound_tol = positive(n["bound_tol"], w + ".bound_tol");
  out.flow_tol = positive(n["flow_tol"], w + ".flow_tol");
  if (!n["seed"].is_number_integer() || (!n["seed"].is_number_unsigned() && n["seed"].get<long long>() < 0)) {
    fail(w + ".seed", "expected a non-negative integer");
  }
  out.seed = n["seed"].get<std::uint64_t>();
  if (!n["record_timing"].is_boolean()) fail(w + ".record_timing", "expected a boolean");
  out.record_timing = n["record_timing"].get<bool>();
  return out;
}

}  // namespace

json default_numerics() {
  return json{
      {"green_tol", 1e-12},     {"green_k_max", 500},   {"periodic_k_max", 200000},
      {"lyap_n", 10000},        {"lyap_transient", 100000}, {"renorm_every", 1},
      {"zero_threshold", nullptr}, {"gap_tol", 1e-8},   {"t_warm", 40.0},
      {"lyap_t", 100.0},        {"flow_renorm", 1.0},   {"integrator", "adaptive"},
      {"abs_tol", 1e-13},       {"rel_tol", 1e-13},     {"splitting_dt", 1e-3},
      {"equality_tol", 1e-6},   {"bound_tol", 1e-8},    {"flow_tol", 1e-6},
      {"seed", 0},              {"record_timing", false},
  };
}

Scenario parse_scenario(const json& config, std::optional<std::uint64_t> seed) {
  if (!config.is_object()) fail("config", "expected a JSON object");
  only_keys(config, "config", {"id", "system", "orbit", "numerics", "scan", "description"});
  const json& id = need(config, "id", "config");
  if (!id.is_string() || id.get<std::string>().empty()) fail("id", "expected a non-empty string");

  json numerics = default_numerics();
  if (config.contains("numerics")) {
    const json& user = config["numerics"];
    if (!user.is_object()) fail("numerics", "expected an object");
    for (const auto& [key, value] : user.items()) {
      if (!numerics.contains(key)) fail("numerics", "unknown key '" + key + "'");
      numerics[key] = value;
    }
  }
  if (seed) numerics["seed"] = *seed;

  Scenario s;
  s.id = id.get<std::string>();
  try {
    s.system = parse_system(need(config, "system", "config"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail("system", e.what());
  }
  s.orbit = parse_orbit(need(config, "orbit", "config"), s.system);
  s.numerics = parse_numerics(numerics);

  s.resolved = config;
  s.resolved.erase("scan");
  s.resolved["numerics"] = numerics;
  if (s.system.kind == SystemKind::kHamiltonian && s.system.family == "pendulum") {
    s.resolved["system"]["scale"] = s.system.scale;
  }
  if (s.orbit.type == OrbitType::kPoint) {
    s.resolved["orbit"]["window"] = s.orbit.window;
    s.resolved["orbit"]["samples"] = s.orbit.samples;
  }
  if (s.resolved["system"].contains("potential")) {
    for (auto& term : s.resolved["system"]["potential"]) {
      if (!term.contains("phase")) term["phase"] = 0.0;
    }
  }
  return s;
}

std::vector<json> expand_scan(const json& config) {
  if (!config.is_object() || !config.contains("scan")) fail("scan", "config has no scan block");
  const json& scan = config["scan"];
  if (!scan.is_object()) fail("scan", "expected an object");
  json base = config;
  base.erase("scan");
  const std::string id = config.value("id", std::string("scan"));

  std::vector<json> out;
  if (scan.contains("parameter")) {
    only_keys(scan, "scan", {"parameter", "values"});
    const json& param = scan["parameter"];
    const json& values = need(scan, "values", "scan");
    if (!param.is_string()) fail("scan.parameter", "expected a JSON pointer string");
    if (!values.is_array()) fail("scan.values", "expected an array");
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(param.get<std::string>());
    } catch (const json::exception& e) {
      fail("scan.parameter", e.what());
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      json point = base;
      try {
        point[ptr] = values[i];
      } catch (const json::exception& e) {
        fail("scan.parameter", e.what());
      }
      point["id"] = id + "/" + std::to_string(i);
      out.push_back(std::move(point));
    }
  } else if (scan.contains("points")) {
    only_keys(scan, "scan", {"points"});
    const json& pts = scan["points"];
    if (!pts.is_array()) fail("scan.points", "expected an array of merge patches");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!pts[i].is_object()) fail("scan.points[" + std::to_string(i) + "]", "expected an object");
      json point = base;
      point.merge_patch(pts[i]);
      point["id"] = id + "/" + std::to_string(i);
      out.push_back(std::move(point));
    }
  } else {
    fail("scan", "needs 'parameter' + 'values' or 'points'");
  }
  return out;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "config is not valid JSON: " + std::string(e.what()));
  }
}

}  // namespace twistgreen::runner
