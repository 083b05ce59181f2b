#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "evosemi/cli/pipelines.hpp"

using namespace evosemi;
using evosemi::cli::json;

namespace {

const std::filesystem::path kSource = EVOSEMI_SOURCE_DIR;

double eval(const std::string& src, expr::Vars v = {}, const GrowthRate* mu = nullptr) {
  return expr::Expression::parse(src, expr::kT | expr::kS | expr::kXi, mu)(v);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Undefined;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

json polylog_doc() {
  return json::parse(R"js({
    "name": "unit",
    "window": [-6, 6],
    "pairs": 300,
    "growth_rate": {"catalog": "polynomial_log"},
    "family": {"matrix": [["exp(mu(s) - mu(t))", "0"], ["0", "exp(mu(t) - mu(s))"]]},
    "projection": {"matrix": [["1", "0"], ["0", "0"]]},
    "functions": {"f": {"components": ["max(0, 1 - abs(2*t - 1))", "0"], "support": [0, 1], "nodes": 21}},
    "forcing": "f"
  })js");
}

}  // namespace

TEST(Expression, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(eval("1 + 2 * 3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("2 ^ 3 ^ 2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("-2 ^ 2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("2 ^ -1"), 0.5);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1e-3 * 1000"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1 - 2 - 3"), -4.0);
}

TEST(Expression, FunctionsAndVariables) {
  const expr::Vars v{2.0, -3.0, 0.5};
  EXPECT_DOUBLE_EQ(eval("exp(ln(t))", v), 2.0);
  EXPECT_DOUBLE_EQ(eval("abs(s) + sign(s)", v), 2.0);
  EXPECT_DOUBLE_EQ(eval("min(t, s, xi)", v), -3.0);
  EXPECT_DOUBLE_EQ(eval("max(t, s, xi)", v), 2.0);
  EXPECT_DOUBLE_EQ(eval("pow(t, 10)", v), 1024.0);
  EXPECT_DOUBLE_EQ(eval("ξ * 4", v), 2.0);
  EXPECT_NEAR(eval("sin(pi / 2) + cos(0) + e", v), 2.0 + M_E, 1e-15);
  EXPECT_DOUBLE_EQ(eval("sqrt(16)", v), 4.0);
}

TEST(Expression, ComparisonsAndPiecewise) {
  EXPECT_EQ(eval("1 < 2"), 1.0);
  EXPECT_EQ(eval("2 <= 1"), 0.0);
  EXPECT_EQ(eval("3 == 3"), 1.0);
  EXPECT_EQ(eval("3 != 3"), 0.0);
  const std::string pw = "piecewise(t < 0, -1, t < 1, t, 1)";
  EXPECT_EQ(eval(pw, {-5}), -1.0);
  EXPECT_EQ(eval(pw, {0.25}), 0.25);
  EXPECT_EQ(eval(pw, {7}), 1.0);
}

TEST(Expression, GrowthRateHooks) {
  const auto mu = growth::polynomial_log();
  const expr::Vars v{3.0, 0.0, 0.0};
  EXPECT_NEAR(eval("mu(t)", v, &mu), std::log(4.0), 1e-15);
  EXPECT_NEAR(eval("muinv(mu(t))", v, &mu), 3.0, 1e-9);
  EXPECT_NEAR(eval("dmu(t)", v, &mu), 0.25, 1e-15);
  EXPECT_EQ(kind_of([] { eval("mu(t)"); }), ErrorKind::ConfigError);
}

TEST(Expression, RejectsMalformedInput) {
  for (const char* bad : {"1 +", "foo(1)", "q + 1", "(1", "1 2", "pow(1)", "piecewise(1, 2)", "#"}) {
    EXPECT_EQ(kind_of([&] { eval(bad); }), ErrorKind::ConfigError) << bad;
  }
  EXPECT_EQ(kind_of([] { expr::Expression::parse("s", expr::kT); }), ErrorKind::ConfigError);
}

TEST(Scenario, LoadsPolylogDocument) {
  const auto sc = cli::load_scenario(polylog_doc(), kSource);
  EXPECT_EQ(sc.name, "unit");
  EXPECT_EQ(sc.dim(), 2u);
  EXPECT_EQ(sc.pipelines, cli::pipeline_order());
  const Matrix U = (*sc.family)(2.0, -1.0);
  EXPECT_NEAR(U(0, 0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(U(1, 1), 6.0, 1e-12);
  EXPECT_NEAR(sc.functions.at("f")(0.5)(0), 1.0, 1e-15);
}

TEST(Scenario, UndeclaredFunctionNamesTheField) {
  auto doc = polylog_doc();
  doc["forcing"] = "g";
  const auto msg = message_of([&] { cli::load_scenario(doc, kSource); });
  EXPECT_NE(msg.find("ConfigError"), std::string::npos);
  EXPECT_NE(msg.find("forcing"), std::string::npos);
  EXPECT_NE(msg.find("'g'"), std::string::npos);
}

TEST(Scenario, SchemaViolationsCarryFieldPaths) {
  struct Case {
    std::function<void(json&)> edit;
    std::string path;
  };
  const std::vector<Case> cases{
      {[](json& d) { d["colour"] = 1; }, "colour"},
      {[](json& d) { d["pipelines"] = {"fly"}; }, "pipelines[0]"},
      {[](json& d) { d["tolerances"] = {{"integral", -1.0}}; }, "tolerances.integral"},
      {[](json& d) { d["tolerances"] = {{"bogus", 1.0}}; }, "tolerances.bogus"},
      {[](json& d) { d["family"]["matrix"][1][0] = "s +"; }, "family.matrix[1][0]"},
      {[](json& d) { d["family"]["matrix"][1] = {"0"}; }, "family.matrix[1]"},
      {[](json& d) { d["growth_rate"] = {{"catalog", "cosh"}}; }, "growth_rate.catalog"},
      {[](json& d) { d["functions"]["f"]["components"] = {"1"}; }, "functions.f"},
      {[](json& d) { d["window"] = {3, 1}; }, "window"},
      {[](json& d) { d.erase("projection"); }, "projection"},
      {[](json& d) { d.erase("name"); }, "name"},
  };
  for (const auto& c : cases) {
    auto doc = polylog_doc();
    c.edit(doc);
    const auto msg = message_of([&] { cli::load_scenario(doc, kSource); });
    EXPECT_NE(msg.find("ConfigError: " + c.path + ":"), std::string::npos) << msg;
  }
}

TEST(Scenario, TablesAreRead) {
  auto doc = polylog_doc();
  doc["growth_rate"] = {{"table", "tests/data/mu_table.csv"}};
  doc["functions"]["f"] = {{"table", "tests/data/forcing.csv"}};
  doc["family"]["matrix"] = json::array({json::array({"1", "0"}), json::array({"0", "1"})});
  const auto sc = cli::load_scenario(doc, kSource);
  EXPECT_NEAR((*sc.mu)(1.0), 0.5, 1e-15);
  EXPECT_NEAR((*sc.mu)(4.0), 2.0, 1e-15);
  EXPECT_NEAR(sc.functions.at("f")(0.25)(1), -0.25, 1e-15);
  doc["growth_rate"] = {{"table", "tests/data/missing.csv"}};
  EXPECT_EQ(kind_of([&] { cli::load_scenario(doc, kSource); }), ErrorKind::ConfigError);
}

TEST(Run, TranslationToyPassesEverything) {
  const auto sc = cli::load_scenario_file(kSource / "scenarios/translation.toy.json");
  const auto out = cli::run_scenario(sc, {{}, false});
  EXPECT_EQ(out.results.size(), sc.pipelines.size());
  for (const auto& r : out.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.summary;
}

TEST(Run, PolylogCertificateIsUnitConstants) {
  const auto sc = cli::load_scenario_file(kSource / "scenarios/polylog-dichotomy.json");
  const auto out = cli::run_scenario(sc, {{}, false});
  ASSERT_TRUE(out.all_passed());
  const auto& cert = out.results[6];
  ASSERT_EQ(cert.name, "certify-dichotomy");
  EXPECT_NEAR(cert.report["certificate"]["N"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(cert.report["certificate"]["nu"].get<double>(), 1.0, 1e-9);
}

TEST(Run, FailingToleranceFailsThePipeline) {
  auto doc = polylog_doc();
  doc["pipelines"] = {"check-semigroup"};
  doc["tolerances"] = {{"semigroup", 1e-300}};
  const auto out = cli::run_scenario(cli::load_scenario(doc, kSource), {{}, false});
  ASSERT_EQ(out.results.size(), 1u);
  EXPECT_FALSE(out.results[0].passed);
  EXPECT_NE(out.results[0].summary.find("semigroup"), std::string::npos);
}

TEST(Run, HypothesisViolationIsAPipelineFailure) {
  auto doc = polylog_doc();
  doc["growth_rate"] = {{"catalog", "neg_exp"}};
  doc["family"]["matrix"] = json::array({json::array({"1", "0"}), json::array({"0", "1"})});
  doc["pipelines"] = {"check-semigroup"};
  const auto out = cli::run_scenario(cli::load_scenario(doc, kSource), {{}, false});
  EXPECT_FALSE(out.results[0].passed);
  EXPECT_EQ(out.results[0].report["error"]["kind"], "HypothesisViolation");
}

TEST(Run, ReportsAreDeterministicApartFromTheHeader) {
  const auto dir = std::filesystem::temp_directory_path() / "evosemi_cli_determinism";
  std::filesystem::remove_all(dir);
  auto doc = polylog_doc();
  doc["pipelines"] = {"fit-growth-bound", "certify-dichotomy", "solve-green"};
  const auto sc = cli::load_scenario(doc, kSource);
  cli::run_scenario(sc, {dir / "a", true});
  cli::run_scenario(sc, {dir / "b", true});
  auto body = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string header, rest, line;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("# generated ", 0), 0u);
    while (std::getline(in, line)) rest += line + "\n";
    return rest;
  };
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "a")) {
    ++files;
    const auto other = dir / "b" / e.path().filename();
    ASSERT_TRUE(std::filesystem::exists(other));
    if (e.path().extension() == ".report") {
      EXPECT_EQ(body(e.path()), body(other)) << e.path();
      const auto j = json::parse(body(e.path()));
      EXPECT_EQ(j["scenario"], "unit");
    }
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "unit.solve-green.report"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "unit.solve-green.solution.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "unit.certify-dichotomy.cloud_P.csv"));
  EXPECT_EQ(files, 8u);
  std::filesystem::remove_all(dir);
}
