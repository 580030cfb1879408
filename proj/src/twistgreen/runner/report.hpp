#pragma once

// Verification rows and their CSV / JSON renderings.

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace twistgreen::runner {

enum class Status { kPass, kFail, kSkipped };

const char* to_string(Status s);

struct Row {
  std::string scenario;
  std::string theorem;
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double rhs = std::numeric_limits<double>::quiet_NaN();
  double slack = std::numeric_limits<double>::quiet_NaN();
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  Status status = Status::kSkipped;
  std::string reason;
  long n_steps = 0;
  long k_used = 0;
  double wall_ms = 0.0;
};

/// Equality row: slack = tol - |lhs - rhs|.
Row equality_row(std::string scenario, std::string theorem, double lhs, double rhs, double tol);
/// Inequality row lhs <= rhs: slack = rhs - lhs, pass iff slack >= -tol.
Row bound_row(std::string scenario, std::string theorem, double lhs, double rhs, double tol);
Row skipped_row(std::string scenario, std::string theorem, std::string reason);
Row failed_row(std::string scenario, std::string theorem, std::string reason);

/// Shortest round-trip decimal form; empty for NaN.
std::string format_double(double x);
/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

inline constexpr const char* kCsvHeader = "scenario_id,theorem_id,lhs,rhs,slack,pass,n_steps,k_used,wall_ms";

std::string rows_to_csv(const std::vector<Row>& rows);
nlohmann::json row_to_json(const Row& r);
/// NaN and infinities become null.
nlohmann::json number_or_null(double x);

}  // namespace twistgreen::runner
