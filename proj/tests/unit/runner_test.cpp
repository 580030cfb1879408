#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "twistgreen/errors.hpp"
#include "twistgreen/runner/runner.hpp"
#include "twistgreen/version.hpp"

namespace {

using namespace twistgreen;
using namespace twistgreen::runner;
using tgtest::Gen;

json config_file(const std::string& name) { return load_config(std::string(TG_CONFIG_DIR) + "/" + name); }

const Artifact& artifact(const RunResult& r, const std::string& name) {
  for (const auto& a : r.artifacts) {
    if (a.name == name) return a;
  }
  throw std::runtime_error("no artifact " + name);
}

const Row& row(const RunResult& r, const std::string& theorem) {
  for (const auto& x : r.rows) {
    if (x.theorem == theorem) return x;
  }
  throw std::runtime_error("no row " + theorem);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

json fixed_point(double k) {
  return json{{"id", "fp"},
              {"system", {{"kind", "twist"}, {"family", "standard"}, {"K", k}}},
              {"orbit", {{"type", "periodic"}, {"rotation", {0}}, {"period", 1}}}};
}

TEST(Report, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(format_double(std::nan("")), "");
  EXPECT_EQ(std::stod(format_double(0.962424205)), 0.962424205);
  Gen gen(41);
  for (int i = 0; i < 200; ++i) {
    const double x = gen.normal() * std::pow(10.0, gen.integer(-30, 30));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}

TEST(Report, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Report, CsvLayout) {
  std::vector<Row> rows{equality_row("a,b", "x", 1.0, 1.0, 1e-6), skipped_row("s", "y", "why")};
  const std::string csv = rows_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find("\r\n")), kCsvHeader);
  EXPECT_NE(csv.find("\r\n\"a,b\",x,1,1,"), std::string::npos);
  EXPECT_NE(csv.find(",pass,"), std::string::npos);
  EXPECT_NE(csv.find("\r\ns,y,,,,skipped,"), std::string::npos);
  EXPECT_EQ(rows_to_csv({}), std::string(kCsvHeader) + "\r\n");
}

TEST(Report, RowInvariants) {
  Gen gen(42);
  for (int i = 0; i < 500; ++i) {
    const double lhs = gen.normal(), rhs = gen.normal(), tol = std::abs(gen.normal()) * 0.5;
    const Row b = bound_row("s", "b", lhs, rhs, tol);
    EXPECT_DOUBLE_EQ(b.slack, rhs - lhs);
    EXPECT_EQ(b.status == Status::kPass, b.slack >= -tol);
    const Row e = equality_row("s", "e", lhs, rhs, tol);
    EXPECT_DOUBLE_EQ(e.slack, tol - std::abs(lhs - rhs));
    EXPECT_EQ(e.status == Status::kPass, e.slack >= 0.0);
    EXPECT_EQ(e.tolerance, tol);
  }
  const Row f = failed_row("s", "t", "boom");
  EXPECT_EQ(f.status, Status::kFail);
  EXPECT_TRUE(std::isnan(f.lhs));
  EXPECT_TRUE(row_to_json(f)["lhs"].is_null());
  EXPECT_EQ(row_to_json(f)["reason"], "boom");
}

TEST(Config, DefaultsAreResolved) {
  const Scenario s = parse_scenario(fixed_point(1.0));
  EXPECT_EQ(s.id, "fp");
  EXPECT_EQ(s.numerics.green_tol, 1e-12);
  EXPECT_EQ(s.numerics.seed, 0u);
  EXPECT_EQ(s.resolved["numerics"], default_numerics());
  EXPECT_EQ(parse_scenario(fixed_point(1.0), 9).numerics.seed, 9u);
}

TEST(Config, Errors) {
  auto bad = [](json j) { return code_of([&] { parse_scenario(j); }); };
  json c = fixed_point(1.0);
  EXPECT_EQ(bad(json::array()), ErrorCode::kConfig);
  c.erase("system");
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["system"]["family"] = "logistic";
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["orbit"]["rotation"] = {0.5};
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["orbit"]["period"] = 0;
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["numerics"] = {{"no_such_knob", 1}};
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["numerics"] = {{"seed", -1}};
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  c = fixed_point(1.0);
  c["orbit"] = {{"type", "point"}, {"q", {0.0}}, {"p", {0.0}}};
  EXPECT_EQ(bad(c), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.json"); }), ErrorCode::kIo);
  EXPECT_EQ(code_of([] { parse_task("explode"); }), ErrorCode::kConfig);
}

TEST(Config, ScanExpansion) {
  const auto points = expand_scan(config_file("standard_k_scan.json"));
  ASSERT_EQ(points.size(), 10u);
  EXPECT_EQ(points[0]["id"], "standard-K-scan/0");
  EXPECT_EQ(points[9]["system"]["K"], 5.0);
  EXPECT_FALSE(points[0].contains("scan"));
  const auto patched = expand_scan(config_file("negative_control_scan.json"));
  ASSERT_EQ(patched.size(), 2u);
  EXPECT_EQ(patched[1]["orbit"]["points"], json::parse("[[0.0]]"));
  EXPECT_TRUE(expand_scan(config_file("empty_scan.json")).empty());
  EXPECT_EQ(code_of([] { expand_scan(fixed_point(1.0)); }), ErrorCode::kConfig);
}

TEST(Verify, StandardFixedPoint) {
  const RunResult r = run(config_file("standard_fixed_point.json"), Task::kVerify);
  EXPECT_EQ(r.exit_code, 0);
  for (const Row& x : r.rows) EXPECT_EQ(x.status, Status::kPass) << x.theorem << " " << x.reason;
  const Row& sum = row(r, "map-exponent-sum");
  EXPECT_NEAR(sum.lhs, std::log((3.0 + std::sqrt(5.0)) / 2.0), 1e-9);
  EXPECT_NEAR(sum.rhs, sum.lhs, 1e-6);
  const Row& lower = row(r, "map-lower-bound");
  EXPECT_NEAR(lower.lhs, 0.278479271005521257, 1e-9);
  EXPECT_LE(lower.lhs, lower.rhs);
  EXPECT_NEAR(row(r, "distance-bound-1d").rhs, 2.3696, 1e-4);
  EXPECT_LE(row(r, "oseledets-green-inclusion").lhs, 1e-5);
  EXPECT_GT(row(r, "map-exponent-sum").k_used, 0);
  EXPECT_LE(row(r, "map-exponent-sum").k_used, 30);
  EXPECT_EQ(row(r, "map-exponent-sum").wall_ms, 0.0);
}

TEST(Verify, IntegrableCaseSkipsBounds) {
  const RunResult r = run(config_file("standard_k_zero.json"), Task::kVerify);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(row(r, "map-exponent-sum").status, Status::kPass);
  EXPECT_EQ(row(r, "map-lower-bound").status, Status::kSkipped);
  EXPECT_NE(row(r, "map-lower-bound").reason.find("zero exponents"), std::string::npos);
}

TEST(Verify, ProductSystem) {
  const RunResult r = run(config_file("product_2d.json"), Task::kVerify);
  EXPECT_EQ(r.exit_code, 0);
  const Row& sum = row(r, "map-exponent-sum");
  const double l1 = std::log((3.0 + std::sqrt(5.0)) / 2.0), l2 = std::log((4.0 + std::sqrt(12.0)) / 2.0);
  EXPECT_NEAR(sum.lhs, l1 + l2, 1e-9);
  EXPECT_EQ(row(r, "distance-bound-dd").status, Status::kPass);
}

TEST(Verify, PendulumEquilibrium) {
  const RunResult r = run(config_file("pendulum_equilibrium.json"), Task::kVerify);
  EXPECT_EQ(r.exit_code, 0);
  for (const Row& x : r.rows) EXPECT_EQ(x.status, Status::kPass) << x.theorem << " " << x.reason;
  EXPECT_NEAR(row(r, "flow-exponent-sum").lhs, 1.0, 1e-6);
  EXPECT_NEAR(row(r, "flow-lower-bound").lhs, 1.0, 1e-6);
  EXPECT_EQ(row(r, "wronskian-monotone").status, Status::kPass);
}

TEST(Verify, FlatTorusRejectsTheLowerBound) {
  const RunResult r = run(config_file("flat_torus.json"), Task::kVerify);
  EXPECT_EQ(row(r, "flow-exponent-sum").status, Status::kPass);
  EXPECT_EQ(row(r, "flow-lower-bound").status, Status::kSkipped);
}

TEST(Verify, SegmentOrbitIsAConfigError) {
  EXPECT_EQ(code_of([] { run(config_file("standard_segment.json"), Task::kVerify); }), ErrorCode::kConfig);
}

TEST(Verify, ReportMetadata) {
  const RunResult r = run(config_file("standard_fixed_point.json"), Task::kVerify);
  const json report = json::parse(artifact(r, "report.json").content);
  EXPECT_EQ(report["library"], kLibraryName);
  EXPECT_EQ(report["version"], kVersion);
  EXPECT_EQ(report["task"], "verify");
  EXPECT_EQ(report["exit_code"], 0);
  EXPECT_EQ(report["summary"]["rows"], r.rows.size());
  EXPECT_EQ(report["config"]["numerics"]["seed"], 0);
  ASSERT_EQ(report["scenarios"].size(), 1u);
  EXPECT_TRUE(report["scenarios"][0]["diagnostics"].contains("spectrum"));
  EXPECT_EQ(artifact(r, "report.csv").content, rows_to_csv(r.rows));
}

TEST(Scan, KScanAllPass) {
  const RunResult r = run(config_file("standard_k_scan.json"), Task::kScan, {std::nullopt, 4});
  EXPECT_EQ(r.exit_code, 0);
  int sums = 0;
  for (const Row& x : r.rows) {
    EXPECT_NE(x.status, Status::kFail) << x.scenario << " " << x.theorem << " " << x.reason;
    if (x.theorem == "map-exponent-sum") ++sums;
  }
  EXPECT_EQ(sums, 10);
}

TEST(Scan, EmptyGrid) {
  const RunResult r = run(config_file("empty_scan.json"), Task::kScan);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(artifact(r, "scan.csv").content, std::string(kCsvHeader) + "\r\n");
}

TEST(Scan, NegativeControlFails) {
  const RunResult r = run(config_file("negative_control_scan.json"), Task::kScan);
  EXPECT_EQ(r.exit_code, 1);
  bool first_ok = true, second_failed = false;
  for (const Row& x : r.rows) {
    if (x.scenario.ends_with("/0") && x.status == Status::kFail) first_ok = false;
    if (x.scenario.ends_with("/1") && x.status == Status::kFail) second_failed = true;
  }
  EXPECT_TRUE(first_ok);
  EXPECT_TRUE(second_failed);
}

TEST(Scan, JobsDoNotChangeOutput) {
  const json c = config_file("standard_k_scan.json");
  const RunResult a = run(c, Task::kScan, {std::nullopt, 1});
  const RunResult b = run(c, Task::kScan, {std::nullopt, 8});
  ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content);
}

TEST(Determinism, RepeatedRunsAreIdentical) {
  for (const char* name : {"standard_fixed_point.json", "pendulum_rotation.json", "minimize_period2.json"}) {
    const json c = config_file(name);
    const RunResult a = run(c, Task::kVerify, {7, 1});
    const RunResult b = run(c, Task::kVerify, {7, 1});
    ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
    for (std::size_t i = 0; i < a.artifacts.size(); ++i) EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content) << name;
  }
}

TEST(Tasks, MinimizePeriodTwo) {
  const RunResult r = run(config_file("minimize_period2.json"), Task::kMinimize);
  EXPECT_EQ(r.exit_code, 0);
  const json doc = json::parse(artifact(r, "orbit.json").content);
  EXPECT_EQ(doc["task"], "minimize");
  EXPECT_TRUE(doc["result"]["certificate"]["certified"].get<bool>());
  EXPECT_EQ(code_of([] { run(config_file("standard_segment.json"), Task::kMinimize); }), ErrorCode::kConfig);
}

TEST(Tasks, GreenOnSegment) {
  const RunResult r = run(config_file("standard_segment.json"), Task::kGreen);
  EXPECT_EQ(r.exit_code, 0);
  const json doc = json::parse(artifact(r, "green.json").content);
  const json& pts = doc["result"]["points"];
  ASSERT_FALSE(pts.empty());
  EXPECT_NEAR(pts[0]["s_plus"][0][0].get<double>(), (std::sqrt(5.0) - 1.0) / 2.0, 1e-10);
  EXPECT_NEAR(pts[0]["s_minus"][0][0].get<double>(), -(1.0 + std::sqrt(5.0)) / 2.0, 1e-10);
}

TEST(Tasks, LyapunovOnFlow) {
  const RunResult r = run(config_file("pendulum_equilibrium.json"), Task::kLyapunov);
  EXPECT_EQ(r.exit_code, 0);
  const json doc = json::parse(artifact(r, "lyapunov.json").content);
  EXPECT_NEAR(doc["result"]["spectrum"]["exponents"][0].get<double>(), 1.0, 2e-2);
}

TEST(Tasks, NumericFailureIsExitOne) {
  json c = fixed_point(1.0);
  c["orbit"] = {{"type", "configuration"}, {"rotation", {0}}, {"points", {{0.0}}}};
  const RunResult r = run(c, Task::kGreen);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(json::parse(artifact(r, "green.json").content)["result"].contains("error"));
}

}  // namespace
