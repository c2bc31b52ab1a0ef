#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "loocmi/errors.hpp"
#include "loocmi/experiment.hpp"

using namespace loocmi;

namespace {

const char* kMinimal = R"({
  "name": "minimal",
  "domain": {"size": 3},
  "convention": "lower",
  "distribution": {"support": [[1, 1, "1/3"], [2, 1, "1/3"], [3, 0, "1/3"]]},
  "learner": {"name": "fig1"},
  "n": 2
})";

std::vector<std::string> problems(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& ps, const std::string& needle) {
  for (const auto& p : ps) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> csv_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST(ParseConfig, MinimalConfigParses) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(c.name, "minimal");
  EXPECT_EQ(c.n, 2u);
  EXPECT_EQ(c.domain->size(), 3u);
  EXPECT_EQ(c.cls->size(), 4u);
  EXPECT_EQ(c.distribution->size(), 3u);
  EXPECT_EQ(c.mode, Mode::exact);
  EXPECT_EQ(c.fingerprint.size(), 16u);
  EXPECT_EQ(make_learner(c)->name(), "fig1");
}

TEST(ParseConfig, MassSumViolationNamesTheField) {
  auto doc = Json::parse(kMinimal);
  doc["distribution"]["support"] = Json::parse(R"([[1, 1, 0.3], [2, 1, 0.3], [3, 0, 0.3]])");
  const auto ps = problems(doc);
  ASSERT_FALSE(ps.empty());
  EXPECT_TRUE(mentions(ps, "distribution"));
}

TEST(ParseConfig, MonteCarloNeedsASeed) {
  auto doc = Json::parse(kMinimal);
  doc["mode"] = "mc";
  EXPECT_TRUE(mentions(problems(doc), "seed"));
  doc["seed"] = 5;
  EXPECT_TRUE(problems(doc).empty());
}

TEST(ParseConfig, ReportsEveryProblem) {
  auto doc = Json::parse(kMinimal);
  doc["learner"]["name"] = "oracle";
  doc["loss"] = "hinge";
  doc["n"] = 0;
  doc["budget"] = -1;
  doc["mystery"] = true;
  const auto ps = problems(doc);
  EXPECT_GE(ps.size(), 5u);
  EXPECT_TRUE(mentions(ps, "learner"));
  EXPECT_TRUE(mentions(ps, "loss"));
  EXPECT_TRUE(mentions(ps, "budget"));
  EXPECT_TRUE(mentions(ps, "mystery"));
}

TEST(ParseConfig, RejectsUnknownClassAndTargets) {
  auto doc = Json::parse(kMinimal);
  doc["class"] = {{"family", "polynomials"}};
  EXPECT_TRUE(mentions(problems(doc), "class"));
  doc = Json::parse(kMinimal);
  doc["distribution"] = {{"target", "t9"}};
  EXPECT_FALSE(problems(doc).empty());
  EXPECT_THROW(parse_config_text("{not json"), std::exception);
}

TEST(ParseConfig, BudgetFallsBackToEnvironment) {
  ::setenv(kBudgetEnv, "12345", 1);
  EXPECT_EQ(default_budget(), 12345.0);
  EXPECT_EQ(parse_config_text(kMinimal).budget, 12345.0);
  ::unsetenv(kBudgetEnv);
  EXPECT_EQ(default_budget(), kDefaultBudget);
  EXPECT_EQ(parse_config_text(kMinimal, 77.0).budget, 77.0);
}

TEST(Fingerprint, InvariantUnderKeyOrder) {
  const auto a = Json::parse(R"({"b": 1, "a": {"y": [1, 2], "x": "s"}})");
  const auto b = Json::parse(R"({"a": {"x": "s", "y": [1, 2]}, "b": 1})");
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  const auto c = Json::parse(R"({"a": {"x": "s", "y": [2, 1]}, "b": 1})");
  EXPECT_NE(fingerprint(a), fingerprint(c));
  const std::string reordered = R"({"n": 2, "learner": {"name": "fig1"},
    "distribution": {"support": [[1, 1, "1/3"], [2, 1, "1/3"], [3, 0, "1/3"]]},
    "convention": "lower", "domain": {"size": 3}, "name": "minimal"})";
  EXPECT_EQ(parse_config_text(reordered).fingerprint, parse_config_text(kMinimal).fingerprint);
}

TEST(Run, ConstantLearnerGivesZeroMeasures) {
  const auto c = parse_config_text(R"({
    "domain": {"size": 3}, "class": {"family": "thresholds"},
    "distribution": {"target": "t0"}, "learner": {"name": "constant", "label": 1}, "n": 2})");
  const auto r = run(c);
  EXPECT_EQ(r.failures, 0u);
  for (const char* m : {"loo_ecmi", "mi_L_U", "mi_Yhat_U_given_Z", "risk"}) {
    EXPECT_EQ(r.report["measures"][m].get<double>(), 0.0) << m;
  }
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(run(c).report.dump(), run(c).report.dump());
  auto doc = Json::parse(kMinimal);
  doc["mode"] = "mc";
  doc["seed"] = 11;
  doc["samples"] = 2000;
  const auto mc = parse_config(doc);
  const auto a = run(mc).report;
  EXPECT_EQ(a.dump(), run(mc).report.dump());
  EXPECT_NE(a.dump().find("\"mc\""), std::string::npos);
  // the serial reference sums in a different order, so only agree to rounding
  const auto s = run(mc, {Exec::serial}).report;
  EXPECT_NEAR(a["mc"]["estimate"].get<double>(), s["mc"]["estimate"].get<double>(), 1e-12);
}

TEST(Run, BitsOnlyChangesUnits) {
  const auto c = parse_config_text(kMinimal);
  const auto nats = run(c).report;
  const auto bits = run(c, {Exec::parallel, true}).report;
  EXPECT_EQ(bits["units"], "bits");
  EXPECT_NEAR(bits["measures"]["loo_ecmi"].get<double>() * std::log(2.0),
              nats["measures"]["loo_ecmi"].get<double>(), 1e-15);
  EXPECT_EQ(bits["measures"]["risk"], nats["measures"]["risk"]);
  EXPECT_EQ(bits["failures"], nats["failures"]);
}

TEST(Run, BudgetErrorsSurface) {
  auto doc = Json::parse(kMinimal);
  doc["budget"] = 5;
  EXPECT_THROW(run(parse_config(doc)), BudgetError);
}

TEST(SetPath, CreatesNestedObjects) {
  Json doc = Json::object();
  set_path(doc, "domain.size", 5);
  set_path(doc, "n", 3);
  EXPECT_EQ(doc["domain"]["size"], 5);
  EXPECT_EQ(doc["n"], 3);
}

TEST(CsvField, QuotesWhenNeeded) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Sweep, EmptyGridGivesHeaderOnly) {
  const auto r = sweep(Json::parse(kMinimal), Json::object());
  const auto lines = csv_lines(r.csv);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].rfind("cell,", 0), 0u);
  EXPECT_EQ(r.cells, 0u);
}

TEST(Sweep, OigOverNStaysUnderTheBound) {
  const auto tmpl = Json::parse(R"({
    "domain": {"size": 5}, "class": {"family": "thresholds"}, "convention": "upper",
    "distribution": {"target": "t2"}, "learner": {"name": "oig"}, "n": 2})");
  const auto r = sweep(tmpl, Json::parse(R"({"n": [2, 3, 4, 5, 6]})"));
  EXPECT_EQ(r.cells, 5u);
  EXPECT_EQ(r.cell_errors, 0u);
  EXPECT_EQ(r.failures, 0u);
  const auto lines = csv_lines(r.csv);
  ASSERT_EQ(lines.size(), 6u);
  const auto header = split(lines[0]);
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = split(lines[i]);
    ASSERT_EQ(row.size(), header.size());
    EXPECT_EQ(row[col("n")], std::to_string(i + 1));
    EXPECT_LE(std::stod(row[col("loo_ecmi")]), std::stod(row[col("bound_thm41")]));
    EXPECT_TRUE(row[col("error")].empty());
  }
  // the CSV ends rows with CRLF
  EXPECT_NE(r.csv.find("\r\n"), std::string::npos);
}

TEST(Sweep, CellErrorsAreRecordedAndSweepContinues) {
  const auto r = sweep(Json::parse(kMinimal), Json::parse(R"({"n": [2, 0, 3]})"));
  EXPECT_EQ(r.cells, 3u);
  EXPECT_EQ(r.cell_errors, 1u);
  const auto lines = csv_lines(r.csv);
  EXPECT_EQ(lines.size(), 4u);
}

TEST(Sweep, MonteCarloFillsStderr) {
  auto tmpl = Json::parse(kMinimal);
  tmpl["mode"] = "mc";
  tmpl["samples"] = 500;
  const auto r = sweep(tmpl, Json::parse(R"({"seed": [1, 2]})"));
  const auto lines = csv_lines(r.csv);
  const auto header = split(lines[0]);
  const auto at = static_cast<std::size_t>(
      std::find(header.begin(), header.end(), "loo_ecmi_stderr") - header.begin());
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_FALSE(split(lines[i])[at].empty());
}

TEST(KnownNames, MeasuresAndTheorems) {
  const auto& ms = known_measures();
  EXPECT_NE(std::find(ms.begin(), ms.end(), "loo_ecmi"), ms.end());
  const auto& ts = known_theorems();
  EXPECT_NE(std::find(ts.begin(), ts.end(), "thm51"), ts.end());
}
