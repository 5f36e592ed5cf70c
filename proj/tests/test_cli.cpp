#include "bsem/cli/commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace bsem {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out, err;
};

Run bsem_run(std::vector<std::string> args) {
  args.insert(args.begin(), "bsem");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bsem_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  [[nodiscard]] std::string path(const std::string& name) const { return (dir_ / name).string(); }
  [[nodiscard]] static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
  [[nodiscard]] static nlohmann::json json_of(const std::string& p) { return nlohmann::json::parse(slurp(p)); }
  [[nodiscard]] std::string simulate(int scenario, const std::string& kind, std::size_t n, std::uint64_t seed) const {
    const auto out = path("sim" + std::to_string(scenario) + kind + std::to_string(n));
    const auto r = bsem_run({"simulate", std::to_string(scenario), kind, std::to_string(n), std::to_string(seed), "--out", out});
    EXPECT_EQ(r.code, 0) << r.err;
    return out + "/data.csv";
  }
  fs::path dir_;
};

TEST_F(CliTest, SimulateWritesCsvTruthAndManifest) {
  const auto r = bsem_run({"simulate", "1", "continuous", "1000", "42", "--out", path("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::read_csv(path("s/data.csv"));
  EXPECT_EQ(t.values.rows(), 1000);
  EXPECT_EQ(t.values.cols(), 6);
  const auto truth = json_of(path("s/truth.json"));
  EXPECT_EQ(truth["Lambda"][1][0], 0.8);
  const auto man = json_of(path("s/manifest.json"));
  EXPECT_EQ(man["command"], "simulate");
  EXPECT_EQ(man["seed"], 42);
  ASSERT_EQ(man["outputs"].size(), 2u);
  EXPECT_EQ(man["outputs"][0]["digest"], io::file_digest(path("s/data.csv")));
  // same seed, same bytes
  ASSERT_EQ(bsem_run({"simulate", "1", "continuous", "1000", "--seed", "42", "--out", path("s2")}).code, 0);
  EXPECT_EQ(slurp(path("s/data.csv")), slurp(path("s2/data.csv")));
}

TEST_F(CliTest, FitScenarioOneConverges) {
  const auto data = simulate(1, "continuous", 500, 5);
  const auto r = bsem_run({"fit", "--data", data, "--model", "preset:EZ-continuous", "--out", path("f"), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto d = json_of(path("f/diagnostics.json"));
  EXPECT_LE(d["max_rhat"].get<double>(), 1.01);
  EXPECT_TRUE(d["failures"].empty());
  const auto draws = io::read_csv(path("f/draws.csv"));
  EXPECT_EQ(draws.values.rows(), 4 * 2000);
  EXPECT_EQ(draws.header[0], "chain");
  const auto man = json_of(path("f/manifest.json"));
  EXPECT_EQ(man["inputs"][0]["role"], "data");
  EXPECT_EQ(man["outputs"].size(), 3u);
}

TEST_F(CliTest, FitIsReproducible) {
  const auto data = simulate(1, "continuous", 200, 6);
  const std::vector<std::string> common{"fit", "--data", data, "--model", "preset:AZ-continuous", "--chains", "2", "--warmup", "200", "--samples", "200"};
  auto a = common, b = common;
  a.insert(a.end(), {"--out", path("a")});
  b.insert(b.end(), {"--out", path("b")});
  ASSERT_EQ(bsem_run(a).code, 0);
  ASSERT_EQ(bsem_run(b).code, 0);
  EXPECT_EQ(slurp(path("a/draws.csv")), slurp(path("b/draws.csv")));
  EXPECT_EQ(slurp(path("a/diagnostics.json")), slurp(path("b/diagnostics.json")));
}

TEST_F(CliTest, MalformedRowIsAnInputError) {
  std::ofstream(path("bad.csv")) << "y1,y2,y3,y4,y5,y6\n1,2,3,4,5,6\n1,2,3,4,5,6\n1,2,3\n";
  const auto r = bsem_run({"fit", "--data", path("bad.csv"), "--model", "preset:EZ-continuous", "--out", path("f")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("data row 3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("f/draws.csv")));
}

TEST_F(CliTest, ConfigErrorsAreInputErrors) {
  const auto data = simulate(1, "continuous", 50, 1);
  std::ofstream(path("m.json")) << R"({"variant": "EZ", "factors": 2, "items": ["y1","y2","y3","y4","y5","y6"]})";
  auto r = bsem_run({"fit", "--data", data, "--model", path("m.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("EZ and AZ variants require a loading pattern"), std::string::npos) << r.err;
  r = bsem_run({"fit", "--data", data, "--model", "preset:nope"});
  EXPECT_EQ(r.code, 1);
  r = bsem_run({"fit", "--data", data, "--model", "preset:EZ-binary"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("category code"), std::string::npos);
  EXPECT_EQ(bsem_run({"fit", "--data", data}).code, 1);
  EXPECT_EQ(bsem_run({"frobnicate"}).code, 1);
  EXPECT_EQ(bsem_run({}).code, 1);
  EXPECT_EQ(bsem_run({"fit", "--data", data, "--model", "preset:EZ-continuous", "--samples", "0"}).code, 1);
  EXPECT_EQ(bsem_run({"--help"}).code, 0);
}

TEST_F(CliTest, SingleChainMarksRhatUnavailable) {
  const auto data = simulate(1, "continuous", 200, 2);
  const auto r = bsem_run({"fit", "--data", data, "--model", "preset:EZ-continuous", "--chains", "1", "--warmup", "300",
                           "--samples", "300", "--out", path("f")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto d = json_of(path("f/diagnostics.json"));
  EXPECT_TRUE(d["max_rhat"].is_null());
  EXPECT_EQ(d["rhat_note"], "R-hat unavailable (needs at least two chains)");
  EXPECT_NE(r.out.find("R-hat unavailable"), std::string::npos);
}

TEST_F(CliTest, DiagnosticFailureStillWritesDraws) {
  const auto data = simulate(1, "binary", 300, 2);
  const auto r = bsem_run({"fit", "--data", data, "--model", "preset:AZ-binary", "--chains", "2", "--warmup", "10", "--samples",
                           "20", "--out", path("f")});
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.err.find("diagnostic failure"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("f/draws.csv")));
  EXPECT_EQ(json_of(path("f/manifest.json"))["exit_code"], 2);
}

TEST_F(CliTest, AssessWithoutHypothesisPairOmitsVerdict) {
  const auto data = simulate(1, "continuous", 150, 3);
  const auto r = bsem_run({"assess", "--data", data, "--model", "preset:EFA-continuous", "--model", "preset:EFA-C-continuous",
                           "--chains", "2", "--warmup", "200", "--samples", "200", "--out", path("a")});
  EXPECT_NE(r.code, 1) << r.err;
  EXPECT_NE(r.err.find("warning: verdict omitted"), std::string::npos);
  const auto rep = json_of(path("a/report.json"));
  EXPECT_TRUE(rep["verdict"].is_null());
  EXPECT_EQ(rep["models"].size(), 2u);
  EXPECT_EQ(slurp(path("a/summary.txt")), summary_text(rep));
}

Run assess_bundle(const std::string& data, const std::string& out) {
  return bsem_run({"assess", "--data", data, "--model", "preset:EZ-continuous", "--model", "preset:AZ-continuous", "--model",
                   "preset:EFA-continuous", "--model", "preset:EFA-C-continuous", "--chains", "2", "--warmup", "500", "--samples",
                   "500", "--folds", "3", "--out", out});
}

TEST_F(CliTest, AssessScenarioOneSupportsEz) {
  const auto data = simulate(1, "continuous", 500, 20240601);
  const auto r = assess_bundle(data, path("a"));
  ASSERT_NE(r.code, 1) << r.err;
  const auto rep = json_of(path("a/report.json"));
  EXPECT_EQ(rep["verdict"], "SUPPORT_EZ") << r.out;
  EXPECT_EQ(rep["score"], "variogram");
}

TEST_F(CliTest, AssessScenarioTwoSupportsAz) {
  const auto data = simulate(2, "continuous", 500, 20240601);
  const auto r = assess_bundle(data, path("a"));
  ASSERT_NE(r.code, 1) << r.err;
  const auto rep = json_of(path("a/report.json"));
  EXPECT_EQ(rep["verdict"], "SUPPORT_AZ") << r.out;
}

TEST_F(CliTest, RecoverProducesThirteenRows) {
  const auto r = bsem_run({"recover", "1", "200", "7", "--warmup", "150", "--samples", "150", "--out", path("r")});
  EXPECT_NE(r.code, 1) << r.err;
  const auto j = json_of(path("r/recovery.json"));
  EXPECT_EQ(j["rows"].size(), 13u);
  std::istringstream csv(slurp(path("r/recovery.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "parameter,truth,coverage,bias_mean,bias_median");
  std::getline(csv, line);
  EXPECT_EQ(io::detail::split_record(line, 2).size(), 5u) << line;
}

TEST_F(CliTest, SensitivityReportsEachPrior) {
  const auto data = simulate(1, "continuous", 200, 9);
  const auto r = bsem_run({"sensitivity", "--data", data, "--model", "preset:EZ-continuous", "--warmup", "300", "--samples", "300",
                           "--out", path("s")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = json_of(path("s/sensitivity.json"));
  EXPECT_EQ(j["priors"].size(), 4u);
  EXPECT_EQ(j["rows"][0]["mean"].size(), 4u);
  const auto r2 = bsem_run({"sensitivity", "--data", data, "--model", "preset:EZ-continuous", "--prior", "inv_gamma:1,1", "--prior",
                            "uniform:20", "--warmup", "100", "--samples", "100", "--out", path("s2")});
  EXPECT_NE(r2.code, 1) << r2.err;
  EXPECT_EQ(json_of(path("s2/sensitivity.json"))["priors"].size(), 2u);
  EXPECT_EQ(bsem_run({"sensitivity", "--data", data, "--model", "preset:EZ-continuous", "--prior", "gamma:1"}).code, 1);
}

}  // namespace
}  // namespace bsem
