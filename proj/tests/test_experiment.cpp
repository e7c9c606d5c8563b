#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "entlab/config.hpp"
#include "entlab/error.hpp"
#include "entlab/experiment.hpp"

using namespace entlab;

namespace {

const char* kMinimal = R"({"kind": "converge", "operators": [{"angles": ["1/3"]}], "schedule": [4, 8]})";

ErrorCode code_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ValidationError;
}

std::string what_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string strip_runtime(const std::string& csv) {
  std::string out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t end = csv.find('\n', pos);
    std::string line = csv.substr(pos, end - pos);
    std::size_t c1 = line.find(',');
    c1 = line.find(',', c1 + 1);
    c1 = line.find(',', c1 + 1);
    const std::size_t c2 = line.find(',', c1 + 1);
    out += line.substr(0, c1) + line.substr(c2) + "\n";
    pos = end == std::string::npos ? csv.size() : end + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("minimal config parses to a one-operator converge run") {
  const auto c = parse_config(kMinimal);
  CHECK(c.kind == ExperimentKind::Converge);
  CHECK(c.alpha == std::vector<int>{1});
  REQUIRE(c.operators.size() == 1);
  CHECK(c.operators[0].dim == 1);
  CHECK(c.connecting.empty());
  CHECK(c.schedule == std::vector<double>{4, 8});
  CHECK(c.config_hash.size() == 16);
  const auto sys = build_system(c);
  CHECK(sys.dim() == 1);
}

TEST_CASE("validation errors name the offending key") {
  const std::string ops = R"("operators": [{"angles": ["0"]}], "schedule": [4])";
  const std::string not_surjective = what_of(R"({"kind": "converge", "partition": [1, 3], )" + ops + "}");
  CHECK(not_surjective.find("ValidationError") == 0);
  CHECK(not_surjective.find("NotSurjective") != std::string::npos);
  CHECK(not_surjective.find("/partition") != std::string::npos);

  CHECK(code_of(R"({"kind": "converge", "partition": [], )" + ops + "}") == ErrorCode::ValidationError);
  CHECK(what_of(R"({"kind": "converge", "bogus": 1, )" + ops + "}").find("/bogus") != std::string::npos);
  CHECK(what_of(R"({"kind": "converge", "operators": [{"angles": ["1/0"]}], "schedule": [4]})")
            .find("BadAngle") != std::string::npos);
  CHECK(what_of(R"({"kind": "converge", "operators": [{"angles": ["0"]}], "schedule": [8, 4]})")
            .find("/schedule/1") != std::string::npos);
  CHECK(what_of(R"({"kind": "converge", "operators": [{"angles": ["0"]}], "schedule": [4.5]})")
            .find("/schedule/0") != std::string::npos);
  CHECK(what_of(R"({"kind": "converge", "operators": [{"angles": ["0"], "stable": [1.5]}], "schedule": [4]})")
            .find("/operators/0/stable/0") != std::string::npos);
  CHECK(what_of(R"({"kind": "converge", "partition": [1, 1], "operators": [{"angles": ["0"]}, {"angles": ["0", "1/2"]}], "schedule": [4]})")
            .find("dimensions differ") != std::string::npos);
  CHECK(code_of(R"({"kind": "converge", "operators": [{"angles": ["0"]}]})") == ErrorCode::ValidationError);
  CHECK(code_of("[1, 2]") == ErrorCode::ValidationError);
}

TEST_CASE("parse errors carry a position") {
  const std::string text = "{\n  \"kind\": \"converge\",\n  \"seed\": ]\n}";
  try {
    (void)parse_config(text);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("angle 2/4 normalizes to 1/2 with a warning") {
  const auto c = parse_config(R"({"kind": "converge", "operators": [{"angles": ["2/4"]}], "schedule": [4]})");
  REQUIRE(c.operators[0].angles.size() == 1);
  CHECK(c.operators[0].angles[0] == Rational(1, 2));
  REQUIRE(c.warnings.size() == 1);
  CHECK(c.warnings[0].find("\"1/2\"") != std::string::npos);

  const auto broadcast = parse_config(
      R"({"kind": "converge", "partition": [1, 1, 1], "operators": [{"angles": ["2/4"]}], "schedule": [4]})");
  CHECK(broadcast.warnings.size() == 1);
}

TEST_CASE("config hash ignores key order and output settings") {
  const std::string a = R"({"kind": "converge", "seed": 3, "operators": [{"angles": ["1/3"], "seed": 9}], "schedule": [4]})";
  const std::string b = R"({"schedule": [4], "operators": [{"seed": 9, "angles": ["1/3"]}], "seed": 3, "kind": "converge", "output": "x.csv", "format": "json"})";
  const std::string c = R"({"kind": "converge", "seed": 4, "operators": [{"angles": ["1/3"], "seed": 9}], "schedule": [4]})";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(parse_config(a).config_hash == config_hash(a));
}

TEST_CASE("subcommand kind overrides the document") {
  const auto c = parse_config(R"({"kind": "converge", "operators": [{"angles": ["0"]}], "schedule": [4]})",
                              ExperimentKind::StackingTest);
  CHECK(c.kind == ExperimentKind::StackingTest);
  CHECK(c.warnings.size() == 1);
  CHECK(parse_config(R"({"operators": [{"angles": ["0"]}]})", ExperimentKind::Limit).kind == ExperimentKind::Limit);
}

TEST_CASE("connecting specs") {
  const std::string base = R"({"kind": "limit", "partition": [1, 2, 1], "operators": [{"angles": ["0", "1/2"]}], )";
  const auto id = parse_config(base + R"("connecting": "identity"})");
  const auto sys = build_system(id);
  CHECK(max_abs_diff(sys.connectors()[0], ComplexMatrix::Identity(2, 2)) == 0.0);

  const auto rnd = parse_config(base + R"("connecting": [{"random": {"seed": 1}}, {"matrix": [[1, 0], [[0, 1], 2]]}]})");
  const auto sys2 = build_system(rnd);
  CHECK(sys2.connectors()[1](1, 0) == Complex(0, 1));
  CHECK(sys2.connectors()[0].norm() > 0.0);
  CHECK(code_of(base + R"("connecting": [{"random": {}}]})") == ErrorCode::ValidationError);
  CHECK(code_of(base + R"("connecting": {"matrix": [[1]]}})") == ErrorCode::ValidationError);
}

TEST_CASE("empty record list gives a header-only CSV") {
  CHECK(format_csv({}) == std::string(kCsvHeader) + "\r\n");
  CHECK(format_json({}) == "[]\n");
}

TEST_CASE("CSV quoting follows RFC 4180") {
  ResultRecord r{1, 0.5, 0.25, 1, "a,\"b\"", 7, "h"};
  const std::string csv = format_csv({r});
  CHECK(csv.find("\"a,\"\"b\"\"\"") != std::string::npos);
}

TEST_CASE("one record round-trips through JSON") {
  ResultRecord r{1024, 0.1 + 0.2, 1.0 / 3.0, 12.5, "presum", 18446744073709551615ULL, "0123456789abcdef"};
  const auto back = parse_records_json(format_json({r}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].checkpoint == r.checkpoint);
  CHECK(back[0].error_fro == r.error_fro);
  CHECK(back[0].error_op == r.error_op);
  CHECK(back[0].runtime_ms == r.runtime_ms);
  CHECK(back[0].strategy == r.strategy);
  CHECK(back[0].seed == r.seed);
  CHECK(back[0].config_hash == r.config_hash);
  CHECK_THROWS_AS(parse_records_json("[{}]"), Error);
}

TEST_CASE("emit_results reports unwritable paths") {
  std::ostringstream sink;
  try {
    emit_results({}, OutputFormat::Csv, "/nonexistent-dir/out.csv", sink);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  emit_results({}, OutputFormat::Csv, "", sink);
  CHECK(sink.str() == std::string(kCsvHeader) + "\r\n");
}

TEST_CASE("m=1 unitary converge: errors decrease and end below 0.02") {
  const auto c = parse_config(R"({"kind": "converge", "seed": 11,
      "operators": [{"angles": ["0", "1/3", "1/5", "2/7"]}], "schedule": [64, 256, 1024]})");
  const auto res = run_experiment(c);
  REQUIRE(res.records.size() == 3);
  CHECK(res.records[0].error_op > res.records[1].error_op);
  CHECK(res.records[1].error_op > res.records[2].error_op);
  CHECK(res.records[2].error_op <= 0.02);
  for (const auto& r : res.records) {
    CHECK(r.error_fro >= r.error_op - 1e-15);
    CHECK(r.strategy == "presum");
    CHECK(r.seed == 11);
  }
  CHECK(res.summary.find("entangled-mean-convergence") != std::string::npos);
}

TEST_CASE("identical configs give identical numeric columns") {
  const auto c = parse_config(R"({"kind": "converge", "seed": 5, "partition": [1, 2, 1],
      "operators": [{"angles": ["0", "1/2"], "stable": [[0.3, 0.2]], "basis": "random-similarity"}],
      "connecting": {"random": {"seed": 2}}, "schedule": [8, 16, 32], "threads": 3})");
  const std::string a = strip_runtime(format_csv(run_experiment(c).records));
  const std::string b = strip_runtime(format_csv(run_experiment(c).records));
  CHECK(a == b);
  CHECK(a.find(c.config_hash) != std::string::npos);
}

TEST_CASE("counterexample gaps stay above 1/4") {
  std::string sched;
  for (int j = 4; j <= 8; ++j) {
    const long long p = 1LL << (2 * j);
    sched += (sched.empty() ? "" : ", ") + std::to_string(p) + ", " + std::to_string(2 * p);
  }
  const auto c = parse_config(R"({"kind": "counterexample", "schedule": [)" + sched + "]}");
  const auto res = run_experiment(c);
  REQUIRE(res.records.size() == 10);
  for (std::size_t i = 1; i < res.records.size(); ++i) CHECK(res.records[i].error_op >= 0.25);
  CHECK(res.records[0].error_fro == 86.0 / 256.0);
  CHECK(res.summary.find("\"86/256\"") == std::string::npos);
  CHECK(res.summary.find("\"43/128\"") != std::string::npos);
  CHECK(res.summary.find("divergence-counterexample") != std::string::npos);
}

TEST_CASE("stacking-test residual is at rounding level") {
  const auto c = parse_config(R"({"kind": "stacking-test", "seed": 8, "partition": [1, 2, 2, 1],
      "operators": [{"angles": ["1/3", "1/2"], "stable": [0.5], "basis": "random-similarity"}],
      "connecting": {"random": {"seed": 4}}, "schedule": [8, 32]})");
  const auto res = run_experiment(c);
  REQUIRE(res.records.size() == 2);
  for (const auto& r : res.records) CHECK(r.error_op <= 1e-12 * 10.0);
  CHECK(res.summary.find("diagonal-stacking") != std::string::npos);
}

TEST_CASE("limit, resonances and continuous runs") {
  const auto lim = run_experiment(parse_config(
      R"({"kind": "limit", "partition": [1, 1], "operators": [{"matrix": [[1, 0], [0, -1]]}], "connecting": {"matrix": [[1, 2], [3, 4]]}})"));
  REQUIRE(lim.records.size() == 1);
  CHECK(lim.records[0].error_op == doctest::Approx(4.0));

  const auto res = run_experiment(parse_config(
      R"({"kind": "resonances", "partition": [1, 1], "operators": [{"angles": ["0", "1/2"]}]})"));
  CHECK(res.records.size() == 2);
  for (const auto& r : res.records) CHECK(r.error_op == 0.0);
  CHECK(res.summary.find("\"fragile\"") != std::string::npos);

  const auto cont = run_experiment(parse_config(
      R"({"kind": "continuous", "partition": [1, 1], "operators": [{"frequencies": ["1/2", "0"], "stable": [-0.5]}],
          "connecting": {"random": {"seed": 1}}, "schedule": [20, 200]})"));
  REQUIRE(cont.records.size() == 2);
  CHECK(cont.records[1].error_op < cont.records[0].error_op);
  CHECK(cont.records[0].strategy == "midpoint");
  CHECK(cont.summary.find("quadrature_error_estimate") != std::string::npos);
}

TEST_CASE("budget overrun surfaces as BudgetExceeded") {
  auto c = parse_config(R"({"kind": "converge", "partition": [1, 1], "operators": [{"angles": ["0", "1/2"]}],
      "schedule": [4096], "strategy": "naive", "budget": 1000})");
  try {
    (void)run_experiment(c);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
}
