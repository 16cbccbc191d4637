#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "plurigreen/io/run.hpp"

using namespace plurigreen;
namespace fs = std::filesystem;

namespace {

/// Scratch directory removed at the end of each test.
class RunTest : public ::testing::Test {
 protected:
  void SetUp() override
  {
    root_ = fs::temp_directory_path() / ("plurigreen_run_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
};

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string shipped(const std::string& name) { return std::string(PLURIGREEN_CONFIGS) + "/" + name + ".json"; }

int cli(const std::string& command, const std::string& config, const fs::path& out)
{
  const std::string line = std::string(PLURIGREEN_CLI) + " " + command + " --config " + config + " --out " + out.string() + " >" +
                           (out.string() + ".stdout") + " 2>" + (out.string() + ".stderr");
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Digest from the coreutils tool, independent of the library's hashing.
std::string sha256sum(const fs::path& p)
{
  const std::string cmd = "sha256sum '" + p.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {};
  char buf[256] = {};
  const std::string line = std::fgets(buf, sizeof buf, pipe) ? buf : "";
  ::pclose(pipe);
  return line.substr(0, 64);
}

void write_text(const fs::path& p, const std::string& text)
{
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_F(RunTest, MalformedConfigExitsTwoAndWritesNothing)
{
  const fs::path out = root_ / "malformed";
  EXPECT_EQ(cli("green", shipped("malformed"), out), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(slurp(out.string() + ".stderr").find("config error"), std::string::npos);
}

TEST_F(RunTest, InvalidFieldsAreListedOnStderr)
{
  const fs::path cfg = root_ / "bad.json";
  write_text(cfg, R"({"format": "plurigreen/1", "command": "torus", "problem": {"resolution": 4, "epsilon": 2.0}})");
  const fs::path out = root_ / "bad";
  EXPECT_EQ(cli("torus", cfg.string(), out), 2);
  EXPECT_FALSE(fs::exists(out));
  const std::string err = slurp(out.string() + ".stderr");
  EXPECT_NE(err.find("problem.resolution"), std::string::npos);
  EXPECT_NE(err.find("problem.epsilon"), std::string::npos);
}

TEST_F(RunTest, InfeasibleProblemIsAConfigFault)
{
  const fs::path cfg = root_ / "infeasible.json";
  write_text(cfg, R"({"format": "plurigreen/1", "command": "green", "problem": {
    "domain": {"resolution": 128}, "background": {"base": "zero", "augmentation": 0},
    "poles": [{"center": [[0.3, 0.0]], "f": ["z"]}], "excision_radius": 0.04}})");
  const fs::path out = root_ / "infeasible";
  EXPECT_EQ(cli("green", cfg.string(), out), 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(slurp(out.string() + ".stderr").find("infeasible background"), std::string::npos);
}

TEST_F(RunTest, CommandMismatchExitsTwo)
{
  const fs::path out = root_ / "mismatch";
  EXPECT_EQ(cli("torus", shipped("disk_oracle"), out), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(RunTest, NonConvergenceExitsOneWithPartialOutputs)
{
  const fs::path out = root_ / "nonconv";
  EXPECT_EQ(cli("green", shipped("forced_nonconvergence"), out), 1);
  ASSERT_TRUE(fs::exists(out / "manifest.json"));
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["status"], "failed");
  std::set<std::string> names;
  for (const auto& f : m["files"]) names.insert(f["name"].get<std::string>());
  EXPECT_TRUE(names.contains("report.txt"));
  EXPECT_TRUE(names.contains("run.log"));
  EXPECT_GT(names.size(), 2u);
  EXPECT_NE(slurp(out / "report.txt").find("no convergence"), std::string::npos);
}

TEST_F(RunTest, SuccessfulRunListsEveryFileWithItsDigest)
{
  const fs::path out = root_ / "disk";
  ASSERT_EQ(cli("green", shipped("disk_oracle"), out), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["config"]["command"], "green");
  EXPECT_EQ(m["config"]["output"], out.string());
  std::set<std::string> listed;
  for (const auto& f : m["files"]) {
    const std::string name = f["name"];
    listed.insert(name);
    ASSERT_TRUE(fs::exists(out / name)) << name;
    EXPECT_EQ(f["sha256"].get<std::string>(), sha256sum(out / name)) << name;
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(out / name)) << name;
  }
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name != "manifest.json") {
      EXPECT_TRUE(listed.contains(name)) << name << " not in manifest";
    }
  }
}

TEST_F(RunTest, CsvOutputsAreByteIdenticalAcrossRuns)
{
  const fs::path a = root_ / "a", b = root_ / "b";
  ASSERT_EQ(cli("green", shipped("disk_oracle"), a), 0);
  ASSERT_EQ(cli("green", shipped("disk_oracle"), b), 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GT(compared, 0);
}

TEST_F(RunTest, BlowupRunWritesTheThreshold)
{
  const fs::path cfg = root_ / "blowup.json";
  write_text(cfg, R"({"format": "plurigreen/1", "command": "blowup", "problem": {"samples": {"per_axis": 5}}})");
  const fs::path out = root_ / "blowup";
  ASSERT_EQ(cli("blowup", cfg.string(), out), 0);
  EXPECT_NE(slurp(out / "report.txt").find("epsilon_K"), std::string::npos);
}

TEST_F(RunTest, VerifyLemmasPasses)
{
  const fs::path out = root_ / "lemmas";
  EXPECT_EQ(cli("verify", shipped("verify_lemmas"), out), 0);
  const std::string table = slurp(out / "verify.txt");
  EXPECT_NE(table.find("lambda_threshold"), std::string::npos);
  EXPECT_EQ(table.find("FAIL"), std::string::npos);
}

TEST(RunSuite, UnknownSuiteThrows) { EXPECT_THROW(run_suite("everything", 1), UnknownSuite); }

TEST(RunInProcess, UnknownSuiteIsAConfigFault)
{
  RunConfig c;
  c.command = Command::verify;
  c.suite = "everything";
  c.output = (fs::temp_directory_path() / "plurigreen_unknown_suite").string();
  fs::remove_all(c.output);
  std::ostringstream out, err;
  EXPECT_EQ(run(c, out, err), exit_config);
  EXPECT_FALSE(fs::exists(c.output));
}
