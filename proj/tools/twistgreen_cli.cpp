// twistgreen-cli: runs experiment configs and writes reports to --out.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "twistgreen/twistgreen.h"

namespace {

constexpr int kExitConfig = 2;

const char* row_status(tg_row_status s) {
  switch (s) {
    case TG_ROW_PASS:
      return "pass";
    case TG_ROW_FAIL:
      return "FAIL";
    case TG_ROW_SKIPPED:
      return "skipped";
  }
  return "?";
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

bool write_file(const std::filesystem::path& path, const char* content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  return static_cast<bool>(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green bundles and Lyapunov exponents of twist maps and Tonelli flows"};
  app.set_version_flag("--version", std::string(tg_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
  int jobs = 1;
  app.add_option("--config", config_path, "Scenario config (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Overrides numerics.seed");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--quiet", quiet, "Print nothing on success");
  app.add_option("--jobs", jobs, "Concurrent scan grid points")->check(CLI::PositiveNumber)->capture_default_str();

  for (const char* name : {"verify", "scan", "green", "lyapunov", "minimize"}) app.add_subcommand(name);
  app.get_subcommand("verify")->description("Check the exponent formulas and bounds, write report.json and report.csv");
  app.get_subcommand("scan")->description("Verify every point of the scan grid, write scan.csv and report.json");
  app.get_subcommand("green")->description("Green bundle slopes along the orbit, write green.json");
  app.get_subcommand("lyapunov")->description("Lyapunov spectrum of the orbit, write lyapunov.json");
  app.get_subcommand("minimize")->description("Certified minimizing periodic orbit, write orbit.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string task = app.get_subcommands().front()->get_name();

  std::string config;
  if (!read_file(config_path, config)) {
    std::cerr << "error: cannot read config " << config_path << "\n";
    return kExitConfig;
  }

  tg_result* result = nullptr;
  const tg_status st = tg_run(config.c_str(), task.c_str(), seed_opt->count() > 0, seed, jobs, &result);
  if (st != TG_OK) {
    std::cerr << "error: " << tg_last_error() << "\n";
    return st == TG_CONFIG ? kExitConfig : 1;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  int code = tg_result_exit_code(result);
  for (std::size_t i = 0; i < tg_result_artifact_count(result); ++i) {
    const auto path = std::filesystem::path(out_dir) / tg_result_artifact_name(result, i);
    if (!write_file(path, tg_result_artifact_content(result, i))) {
      std::cerr << "error: cannot write " << path.string() << "\n";
      tg_result_free(result);
      return kExitConfig;
    }
    if (!quiet) std::cout << "wrote " << path.string() << "\n";
  }

  if (!quiet || code != 0) {
    for (std::size_t i = 0; i < tg_result_row_count(result); ++i) {
      tg_row r;
      if (tg_result_row(result, i, &r) != TG_OK) continue;
      if (quiet && r.status != TG_ROW_FAIL) continue;
      std::cout << row_status(r.status) << "  " << r.scenario << "  " << r.theorem << "  lhs=" << r.lhs
                << " rhs=" << r.rhs << " slack=" << r.slack;
      if (r.status != TG_ROW_PASS && r.reason[0] != '\0') std::cout << "  (" << r.reason << ")";
      std::cout << "\n";
    }
  }
  tg_result_free(result);
  return code;
}
