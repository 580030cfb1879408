#pragma once

// Scenario configuration: parsing, validation and default resolution.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twistgreen/symgeo.hpp"
#include "twistgreen/trig_polynomial.hpp"

namespace twistgreen::runner {

using json = nlohmann::json;

enum class SystemKind { kTwist, kHamiltonian };

struct SystemSpec {
  SystemKind kind = SystemKind::kTwist;
  std::string family;  // twist: standard | trig; hamiltonian: pendulum | mechanical | flat
  double k = 0.0;      // standard
  double scale = 1.0;  // pendulum
  int dim = 1;
  TrigPolynomial potential;  // trig, mechanical
};

enum class OrbitType { kPeriodic, kConfiguration, kSegment, kPoint };

struct OrbitSpec {
  OrbitType type = OrbitType::kPeriodic;
  Vector rotation;                          // periodic, configuration
  int period = 1;                           // periodic
  std::optional<std::vector<Vector>> points;  // periodic init, configuration points
  Vector q, p;                              // segment, point
  long length = 0;                          // segment
  double window = 0.0;                      // point
  int samples = 1;                          // point
};

struct Numerics {
  double green_tol = 1e-12;
  int green_k_max = 500;
  int periodic_k_max = 200000;
  long lyap_n = 10000;
  long lyap_transient = 100000;
  int renorm_every = 1;
  std::optional<double> zero_threshold;
  double gap_tol = 1e-8;
  double t_warm = 40.0;
  double lyap_t = 100.0;
  double flow_renorm = 1.0;
  std::string integrator = "adaptive";
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  double splitting_dt = 1e-3;
  double equality_tol = 1e-6;
  double bound_tol = 1e-8;
  double flow_tol = 1e-6;
  std::uint64_t seed = 0;
  bool record_timing = false;
};

struct Scenario {
  std::string id;
  SystemSpec system;
  OrbitSpec orbit;
  Numerics numerics;
  json resolved;  // input with every default made explicit
};

/// The default numerics block.
json default_numerics();

/// Validates and resolves one scenario (scan block excluded). `seed`
/// overrides numerics.seed. Throws Error(Config).
Scenario parse_scenario(const json& config, std::optional<std::uint64_t> seed = {});

/// Grid points of a scan: each entry is a full scenario config without the
/// scan block, with id "<id>/<index>". Throws Error(Config).
std::vector<json> expand_scan(const json& config);

/// Reads and parses a JSON file. Throws Error(Io) or Error(Config).
json load_config(const std::string& path);

}  // namespace twistgreen::runner
