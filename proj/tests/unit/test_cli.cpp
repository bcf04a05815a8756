#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "calitr/cli.hpp"
#include "calitr/io.hpp"
#include "calitr/random.hpp"
#include "calitr/scenario.hpp"

using namespace calitr;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "calitr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string error_code(const CliRun& r) {
  const auto pos = r.err.rfind("{\"error\"");
  if (pos == std::string::npos) return "";
  return json::parse(r.err.substr(pos))["error"]["code"].get<std::string>();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("calitr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    ScenarioSpec spec;
    spec.scenario = 2;
    spec.n = 400;
    Rng rng = make_rng(11, 0);
    const SourceSample s = generate_source(spec, rng);
    std::string csv = "y,a,x1,x2,x3\n";
    for (Index i = 0; i < s.n(); ++i) {
      csv += format_g12(s.Y()[i]) + "," + std::to_string(s.A()[i]);
      for (Index j = 0; j < s.p(); ++j) csv += "," + format_g12(s.X()(i, j));
      csv += "\n";
    }
    write_text(path("s.csv"), csv);
    write_text(path("c.json"),
               R"({"moments":[{"kind":"mean","index":1},{"kind":"mean","index":2},)"
               R"({"kind":"mean","index":3}],"targets":[0.8,0.6,-0.6]})");
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  fs::path dir;
};

const std::vector<std::string> kSmallGa = {"--ga-pop", "16", "--ga-gens", "6", "--ga-restarts", "1"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_F(Cli, CalibrateWritesWeightsAndSidecar) {
  const CliRun r = run({"calibrate", "--data", path("s.csv"), "--constraints", path("c.json"), "--gamma", "0",
                     "--out", path("w.csv"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.err.empty());
  const std::string csv = read_text(path("w.csv"));
  EXPECT_EQ(csv.rfind("# {", 0), 0u);
  EXPECT_NE(csv.find("i,weight,W\n"), std::string::npos);
  const json side = read_json(path("w.csv.json"));
  EXPECT_TRUE(side["feasible"].get<bool>());
  EXPECT_LT(side["residual"].get<double>(), 1e-8);
  EXPECT_EQ(side["provenance"]["tool"], "calitr");
  EXPECT_EQ(side["provenance"]["config_hash"].get<std::string>().size(), 16u);
  const Vector w = read_weights(path("w.csv"));
  EXPECT_EQ(w.size(), 400);
  EXPECT_NEAR(w.sum(), 1.0, 1e-9);
}

TEST_F(Cli, LearnEvaluateReport) {
  CliRun r = run(with({"learn", "--data", path("s.csv"), "--constraints", path("c.json"), "--method", "eb",
                    "--out", path("rule.json"), "--seed", "3", "-q"},
                   kSmallGa));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json rule = read_json(path("rule.json"));
  EXPECT_EQ(rule["beta"].size(), 4u);
  EXPECT_NEAR(rule["ci_upper"].get<double>() - rule["value"].get<double>(), 1.96 * rule["se"].get<double>(),
              1e-9);

  r = run({"calibrate", "--data", path("s.csv"), "--constraints", path("c.json"), "--out", path("w.csv"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = run({"evaluate", "--data", path("s.csv"), "--rule", path("rule.json"), "--weights", path("w.csv"), "--out",
           path("e1.json"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = run({"evaluate", "--data", path("s.csv"), "--rule", path("rule.json"), "--out", path("e0.json"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // The calibrated evaluation of the learned rule reproduces the learned value.
  EXPECT_NEAR(read_json(path("e1.json"))["value"].get<double>(), rule["value"].get<double>(), 1e-8);

  r = run({"report", path("e1.json"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("file\tmode\tcalibrated\tn\tvalue\tse\tci_lower\tci_upper\n"), std::string::npos);
  EXPECT_NE(r.out.find("\ttrue\t400\t"), std::string::npos);

  r = run({"report", path("e1.json"), path("e0.json"), "--out", path("t.tsv"), "--json", path("t.json"), "-q"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json rows = read_json(path("t.json"))["rows"];
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0]["calibrated"].get<bool>());
  EXPECT_FALSE(rows[1]["calibrated"].get<bool>());
}

TEST_F(Cli, RepeatRunsAreByteIdentical) {
  const auto args = with({"learn", "--data", path("s.csv"), "--constraints", path("c.json"), "--method", "el",
                          "--seed", "5", "-q"},
                         kSmallGa);
  ASSERT_EQ(run(with(args, {"--out", path("a.json")})).code, kExitOk);
  ASSERT_EQ(run(with(args, {"--out", path("b.json")})).code, kExitOk);
  EXPECT_EQ(read_text(path("a.json")), read_text(path("b.json")));
}

TEST_F(Cli, MissingFileIsValidationError) {
  const CliRun r = run({"calibrate", "--data", path("nope.csv"), "--constraints", path("c.json"), "--out",
                     path("w.csv")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "input.missing_file");
}

TEST_F(Cli, InfeasibleTargetsAreNumericalError) {
  write_text(path("far.json"), R"({"moments":[{"kind":"mean","index":2}],"targets":[50]})");
  const CliRun r = run({"calibrate", "--data", path("s.csv"), "--constraints", path("far.json"), "--out",
                     path("w.csv")});
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_EQ(error_code(r), "calibration.infeasible");
}

TEST_F(Cli, QuantileMomentIsUnsupported) {
  write_text(path("q.json"), R"({"moments":[{"kind":"quantile","index":1,"p":0.5}],"targets":[0]})");
  const CliRun r = run({"calibrate", "--data", path("s.csv"), "--constraints", path("q.json"), "--out",
                     path("w.csv")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "constraints.unsupported_moment");
}

TEST_F(Cli, ReportErrors) {
  CliRun r = run({"report"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "report.empty_input");
  write_text(path("bad.json"), R"({"value":1.0})");
  r = run({"report", path("bad.json")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "report.schema_mismatch");
}

TEST_F(Cli, ParseErrors) {
  CliRun r = run({"calibrate", "--data", path("s.csv")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "input.invalid_argument");
  r = run({"frobnicate"});
  EXPECT_EQ(r.code, kExitValidation);
  write_text(path("broken.json"), "{\"moments\": [");
  r = run({"calibrate", "--data", path("s.csv"), "--constraints", path("broken.json"), "--out", path("w.csv")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_EQ(error_code(r), "input.parse_error");
}

TEST_F(Cli, Version) {
  const CliRun r = run({"--version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "1.0.0\n");
}

TEST_F(Cli, SimulateTableAndPlotData) {
  const CliRun r = run(with({"simulate", "--scenario", "2", "--n", "150", "--reps", "2", "--methods", "eb,orig",
                          "--n-target", "10000", "--pseudo-n", "10000", "--out", path("sim.json"), "--table",
                          path("sim.tsv"), "--emit-plot-data", path("plot.csv"), "-q"},
                         kSmallGa));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string tsv = read_text(path("sim.tsv"));
  EXPECT_NE(tsv.find("s2_n150"), std::string::npos);
  const std::string plot = read_text(path("plot.csv"));
  EXPECT_NE(plot.find("scenario,n,method,rep,ok,error,estimate,se,target_value,pcd"), std::string::npos);
  EXPECT_EQ(read_json(path("sim.json"))["studies"].size(), 1u);
}
