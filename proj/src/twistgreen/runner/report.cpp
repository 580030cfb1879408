#include "twistgreen/runner/report.hpp"

#include <charconv>
#include <cmath>

namespace twistgreen::runner {

const char* to_string(Status s) {
  switch (s) {
    case Status::kPass:
      return "pass";
    case Status::kFail:
      return "fail";
    case Status::kSkipped:
      return "skipped";
  }
  return "unknown";
}

Row equality_row(std::string scenario, std::string theorem, double lhs, double rhs, double tol) {
  Row r;
  r.scenario = std::move(scenario);
  r.theorem = std::move(theorem);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.slack = tol - std::abs(lhs - rhs);
  r.status = r.slack >= 0.0 ? Status::kPass : Status::kFail;
  return r;
}

Row bound_row(std::string scenario, std::string theorem, double lhs, double rhs, double tol) {
  Row r;
  r.scenario = std::move(scenario);
  r.theorem = std::move(theorem);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.slack = rhs - lhs;
  r.status = r.slack >= -tol ? Status::kPass : Status::kFail;
  return r;
}

Row skipped_row(std::string scenario, std::string theorem, std::string reason) {
  Row r;
  r.scenario = std::move(scenario);
  r.theorem = std::move(theorem);
  r.status = Status::kSkipped;
  r.reason = std::move(reason);
  return r;
}

Row failed_row(std::string scenario, std::string theorem, std::string reason) {
  Row r = skipped_row(std::move(scenario), std::move(theorem), std::move(reason));
  r.status = Status::kFail;
  return r;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string rows_to_csv(const std::vector<Row>& rows) {
  std::string out = std::string(kCsvHeader) + "\r\n";
  for (const Row& r : rows) {
    out += csv_field(r.scenario) + ',' + csv_field(r.theorem) + ',' + format_double(r.lhs) + ',' +
           format_double(r.rhs) + ',' + format_double(r.slack) + ',' + to_string(r.status) + ',' +
           std::to_string(r.n_steps) + ',' + std::to_string(r.k_used) + ',' + format_double(r.wall_ms) + "\r\n";
  }
  return out;
}

nlohmann::json number_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::json row_to_json(const Row& r) {
  return nlohmann::json{
      {"scenario", r.scenario},
      {"theorem", r.theorem},
      {"lhs", number_or_null(r.lhs)},
      {"rhs", number_or_null(r.rhs)},
      {"slack", number_or_null(r.slack)},
      {"tolerance", number_or_null(r.tolerance)},
      {"status", to_string(r.status)},
      {"reason", r.reason},
      {"n_steps", r.n_steps},
      {"k_used", r.k_used},
      {"wall_ms", r.wall_ms},
  };
}

}  // namespace twistgreen::runner
