#pragma once

// Experiment runner behind the CLI and the C API. Config errors are thrown as
// Error(Config); numeric failures end up in rows or artifacts and exit code 1.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twistgreen/runner/config.hpp"
#include "twistgreen/runner/report.hpp"

namespace twistgreen::runner {

enum class Task { kVerify, kScan, kGreen, kLyapunov, kMinimize };

const char* task_name(Task t);
/// Throws Error(Config) for unknown names.
Task parse_task(const std::string& name);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
};

struct RunResult {
  int exit_code = 0;  // 0 all pass, 1 any failure
  std::vector<Row> rows;
  std::vector<Artifact> artifacts;
};

/// Rows of one resolved scenario; never throws for numeric failures.
struct ScenarioResult {
  std::vector<Row> rows;
  json diagnostics;
};

ScenarioResult verify_scenario(const Scenario& s);

RunResult run(const json& config, Task task, const RunOptions& opts = {});

}  // namespace twistgreen::runner
