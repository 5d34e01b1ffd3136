#include "fixtures.hpp"

#include "mrtele/cli.hpp"
#include "mrtele/telemetry.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mrtele;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mrtele");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = mrtele::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "mrtele_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scenario(const std::string& name) { return mrtele::testing::kScenarioDir + "/" + name + ".json"; }

}  // namespace

TEST(Cli, RunWritesOneRowPerTick) {
  const auto out = temp_dir() / "fig4.csv";
  const auto r = invoke({"run", "--scenario", scenario("fig4_track"), "--out", out.string()});
  ASSERT_EQ(r.code, mrtele::cli::kExitOk) << r.err;
  const auto recs = session::import_telemetry(out.string());
  EXPECT_EQ(recs.size(), 4500u);
}

TEST(Cli, RunIsReproducibleAndSeedOverrides) {
  const auto dir = temp_dir();
  ASSERT_EQ(invoke({"run", "--scenario", scenario("minimal"), "--out", (dir / "a.jsonl").string()}).code, 0);
  ASSERT_EQ(invoke({"run", "--scenario", scenario("minimal"), "--out", (dir / "b.jsonl").string()}).code, 0);
  ASSERT_EQ(invoke({"run", "--scenario", scenario("minimal"), "--out", (dir / "c.jsonl").string(), "--seed", "77"}).code, 0);
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  EXPECT_NE(slurp(dir / "a.jsonl"), slurp(dir / "c.jsonl"));
  EXPECT_EQ(slurp(dir / "a.jsonl").front(), '{');
}

TEST(Cli, MetricsTable) {
  const auto r = invoke({"metrics"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("93.6"), std::string::npos);
  EXPECT_NE(r.out.find("4.05e+05"), std::string::npos);
  EXPECT_NE(r.out.find("4.154"), std::string::npos);
  const auto j = nlohmann::json::parse(invoke({"metrics", "--json", "--mass", "0.9"}).out);
  EXPECT_NEAR(j.at("tmr_nm_per_kg").get<double>(), 42.12 / 0.9, 1e-12);
}

TEST(Cli, FitWritesJson) {
  const auto dir = temp_dir();
  {
    std::ofstream f(dir / "samples.csv");
    f << "current_a,torque_nm\n";
    for (int i = 1; i <= 13; ++i) {
      const double x = 0.1 * i;
      f << x << "," << 54.28 * std::pow(x, 1.96) / (std::pow(0.66, 1.96) + std::pow(x, 1.96)) << "\n";
    }
  }
  const auto r = invoke({"fit", "--input", (dir / "samples.csv").string(), "--out", (dir / "fit.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "fit.json"));
  EXPECT_NEAR(j.at("v_max_nm").get<double>(), 54.28, 1e-3);
}

TEST(Cli, ExportConvertsBetweenFormats) {
  const auto dir = temp_dir();
  ASSERT_EQ(invoke({"run", "--scenario", scenario("minimal"), "--out", (dir / "m.csv").string()}).code, 0);
  ASSERT_EQ(invoke({"export", "--input", (dir / "m.csv").string(), "--out", (dir / "m.json").string()}).code, 0);
  EXPECT_EQ(session::import_telemetry((dir / "m.csv").string()), session::import_telemetry((dir / "m.json").string()));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, mrtele::cli::kExitUsage);
  EXPECT_EQ(invoke({"fly"}).code, mrtele::cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--scenario", scenario("minimal")}).code, mrtele::cli::kExitUsage);
  EXPECT_EQ(invoke({"metrics", "--bogus"}).code, mrtele::cli::kExitUsage);
  EXPECT_EQ(invoke({"run", "--scenario", "/no/such/file.json", "--out", "x.csv"}).code, mrtele::cli::kExitUsage);
  EXPECT_EQ(invoke({"calibrate-env", "--scenario", scenario("fig6_low"), "--target", "zero"}).code, mrtele::cli::kExitUsage);
}

TEST(Cli, HelpListsOptions) {
  const auto r = invoke({"run", "--help"});
  EXPECT_EQ(r.code, mrtele::cli::kExitOk);
  for (const char* opt : {"--scenario", "--out", "--format", "--seed"}) {
    EXPECT_NE(r.out.find(opt), std::string::npos) << opt;
  }
}

TEST(Cli, RuntimeErrorsExitOne) {
  const auto dir = temp_dir();
  {
    std::ofstream(dir / "bad_gain.json") << R"({"feedback":{"gain":-1},"run":{"duration_s":1}})";
  }
  const auto r = invoke({"run", "--scenario", (dir / "bad_gain.json").string(), "--out", (dir / "x.csv").string()});
  EXPECT_EQ(r.code, mrtele::cli::kExitRuntime);
  EXPECT_NE(r.err.find("feedback.gain"), std::string::npos);

  EXPECT_EQ(invoke({"metrics", "--mass", "0"}).code, mrtele::cli::kExitRuntime);
  EXPECT_EQ(invoke({"run", "--scenario", scenario("minimal"), "--out", "/no/such/dir/x.csv"}).code,
            mrtele::cli::kExitRuntime);
}

TEST(Cli, CalibrateWritesStiffnessBack) {
  const auto dir = temp_dir();
  fs::copy_file(scenario("fig6_low"), dir / "low.json", fs::copy_options::overwrite_existing);
  const auto r = invoke({"calibrate-env", "--scenario", (dir / "low.json").string(), "--target", "1=2.0", "--tol",
                      "0.05", "--out", (dir / "low_tuned.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tuned = session::load_scenario_file((dir / "low_tuned.json").string());
  const auto orig = session::load_scenario_file((dir / "low.json").string());
  EXPECT_LT(tuned.objects[0].stiffness, orig.objects[0].stiffness);
}
