#include "cinempc/scenario.hpp"
#include "cinempc/trace.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CINEMPC_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cinempc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string shipped(const std::string& name) { return cinempc::testkit::source_path("scenarios/" + name).string(); }

constexpr const char* kShort = R"({
  "version": 1,
  "duration": 1,
  "drone": { "position": [-5, 0, 0.9] },
  "targets": [ { "id": "s", "waypoints": [ { "time": 0, "position": [0, 0, 0.9] } ] } ],
  "sequences": [ { "start": 0, "depth": [ { "target": "s", "depth": 4, "weight": 1 } ] } ]
})";

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("run"), 1);
  EXPECT_EQ(cli("run " + shipped("park.json")), 1);  // --out missing
  EXPECT_EQ(cli("run " + shipped("park.json") + " --out /tmp/x --dt -1"), 1);
  EXPECT_EQ(cli("--help"), 0);
}

TEST(Cli, ValidateAndDefaults) {
  EXPECT_EQ(cli("validate " + shipped("park.json")), 0);
  EXPECT_EQ(cli("validate " + shipped("static_target.json")), 0);
  EXPECT_EQ(cli("dump-defaults"), 0);
  const fs::path dir = scratch("validate");
  EXPECT_EQ(cli("validate " + write(dir / "bad.json", R"({ "version": 1, "duration": 1, "oops": 0 })").string()), 1);
  EXPECT_EQ(cli("validate " + (dir / "missing.json").string()), 1);
}

TEST(Cli, RunWritesTraceAndPlots) {
  const fs::path dir = scratch("run");
  const fs::path doc = write(dir / "short.json", kShort);
  EXPECT_EQ(cli("run " + doc.string() + " --out " + (dir / "out").string() + " --plots --quiet --horizon 4 --seed 3"), 0);
  for (const char* f : {"trace.csv", "scenario.json", "cost.svg", "dof.svg", "intrinsics.svg"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const cinempc::Trace t = cinempc::read_trace(dir / "out" / "trace.csv");
  EXPECT_EQ(t.records.size(), 6u);
  const cinempc::Scenario echoed = cinempc::load_scenario(dir / "out" / "scenario.json");
  EXPECT_EQ(echoed.solver.horizon, 4);
  EXPECT_EQ(echoed.seed, 3u);
}

TEST(Cli, NumericFailureExitsTwo) {
  const fs::path dir = scratch("numeric");
  std::string doc = kShort;
  doc.replace(doc.find("\"position\": [-5, 0, 0.9]"), 24, "\"position\": [-5, 0, 0.9], \"velocity\": [1e308, 0, 0]");
  doc.replace(doc.find("\"duration\": 1"), 13, "\"duration\": 5");
  EXPECT_EQ(cli("run " + write(dir / "blow.json", doc).string() + " --out " + (dir / "out").string()), 2);
  const cinempc::Trace partial = cinempc::read_trace(dir / "out" / "trace.csv");
  EXPECT_GT(partial.records.size(), 0u);
  EXPECT_LT(partial.records.size(), 26u);
}
