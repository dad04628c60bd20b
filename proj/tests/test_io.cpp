#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dynmarker/cli.hpp"
#include "dynmarker/scenario_io.hpp"

using namespace dynmarker;
namespace fs = std::filesystem;

namespace {

const std::string kDesk = DYNMARKER_SCENARIO_DIR "/desk_landing.json";

nlohmann::json desk_json() {
  std::ifstream in(kDesk);
  return nlohmann::json::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dynmarker_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(ScenarioIo, DeskLoads) {
  const ScenarioConfig c = load_scenario(kDesk);
  EXPECT_DOUBLE_EQ(c.screen.limit(), 0.15);
  EXPECT_DOUBLE_EQ(c.policy.switch_to_full_pose_below, 1.2);
  EXPECT_DOUBLE_EQ(c.initial_position.z(), 2.5);
  EXPECT_DOUBLE_EQ(c.delays.d_frame, c.camera.frame_period);
}

TEST(ScenarioIo, UnknownKeyNamed) {
  auto j = desk_json();
  j["policy"]["bogus"] = 1;
  try {
    parse_scenario(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "policy.bogus");
  }
}

TEST(ScenarioIo, WrongTypeNamed) {
  auto j = desk_json();
  j["camera"]["fx"] = "fast";
  try {
    parse_scenario(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "camera.fx");
  }
}

TEST(ScenarioIo, UniformDelay) {
  auto j = desk_json();
  j["delays"]["d_mu"] = {{"uniform", {0.030, 0.040}}};
  const ScenarioConfig c = parse_scenario(j);
  EXPECT_DOUBLE_EQ(c.delays.d_mu.lo, 0.030);
  EXPECT_DOUBLE_EQ(c.delays.d_mu.hi, 0.040);
}

TEST(ScenarioIo, InvalidValuesRejected) {
  auto j = desk_json();
  j["policy"]["scale_fraction"] = 1.5;
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(Cli, MissingConfig) {
  std::string err;
  EXPECT_EQ(cli({"run", "--config", "/nonexistent.json"}, nullptr, &err), 1);
  EXPECT_NE(err.find("--config"), std::string::npos);
}

TEST(Cli, UnknownStrategy) {
  EXPECT_EQ(cli({"run", "--config", kDesk, "--strategy", "random"}), 1);
}

TEST(Cli, NoSubcommand) { EXPECT_EQ(cli({}), 1); }

TEST(Cli, RunWritesOutputs) {
  const fs::path dir = scratch("run");
  std::string out;
  ASSERT_EQ(cli({"run", "--config", kDesk, "--out", dir.string()}, &out), 0);
  EXPECT_NE(out.find("status=landed"), std::string::npos);
  EXPECT_GT(line_count(dir / "trace.csv"), 100u);
  EXPECT_GT(line_count(dir / "events.csv"), 1u);
  std::ifstream in(dir / "summary.json");
  EXPECT_EQ(nlohmann::json::parse(in)["status"], "landed");
  std::ifstream csv(dir / "trace.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kTraceHeader);
}

TEST(Cli, CompareRows) {
  const fs::path dir = scratch("compare");
  ASSERT_EQ(cli({"compare", "--config", kDesk, "--out", dir.string()}), 0);
  EXPECT_EQ(line_count(dir / "compare.csv"), 4u);
  std::ifstream in(dir / "static-long-range_summary.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_GE(j["final_yaw_error_rad"].get<double>(), 0.8 * j["initial_yaw_error_rad"].get<double>());
}

TEST(Cli, BatchSummaries) {
  const fs::path dir = scratch("batch");
  ASSERT_EQ(cli({"batch", "--config", kDesk, "--out", dir.string(), "--n", "4", "--jobs", "2"}), 0);
  for (int i = 0; i < 4; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04d_summary.json", i);
    EXPECT_TRUE(fs::exists(dir / name));
  }
  std::ifstream in(dir / "batch_summary.json");
  EXPECT_EQ(nlohmann::json::parse(in)["aggregate"]["runs"], 4);
}

TEST(Cli, DivergedRunExitsTwo) {
  auto j = desk_json();
  j["desired"]["height"] = 10.0;
  j["landing"]["trigger_time"] = nullptr;
  j["sim"]["bounds"] = 3.0;
  const fs::path dir = scratch("diverge");
  fs::create_directories(dir);
  std::ofstream(dir / "s.json") << j.dump();
  EXPECT_EQ(cli({"run", "--config", (dir / "s.json").string(), "--out", (dir / "o").string()}), 2);
}
