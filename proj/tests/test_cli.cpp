// Copyright 2026 The PAPF Ballbot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the installed command-line tool as a subprocess.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

extern char** environ;

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int exit_code = -1;
  std::string output;
};

Outcome run(const std::string& args, const fs::path& cwd = fs::temp_directory_path()) {
  const std::string cmd =
      "cd '" + cwd.string() + "' && '" PAPF_CLI_PATH "' " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.output.append(buf.data(), n);
  const int status = pclose(pipe);
  o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("papf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

constexpr const char* kWall = R"({
  "episode": {"name": "w", "wall": {"distance": 5, "half_length": 3}, "mode": "papf-tracking",
              "rider": {"kind": "aggressive", "aggressiveness": 0.3}, "timeout": 8, "seed": 1},
  "output": {"metrics_json": "w.metrics.json", "trajectory_csv": "w.csv"}
})";

TEST_F(CliTest, HelpListsEveryFlag) {
  const auto top = run("--help");
  EXPECT_EQ(top.exit_code, 0);
  for (const char* s : {"run", "batch", "course", "serve", "PAPF_LOG", "Exit codes"}) {
    EXPECT_NE(top.output.find(s), std::string::npos) << s;
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> flags = {
      {"run", {"--config", "--seed", "--mode", "--out"}},
      {"batch", {"--config", "--seed", "--mode", "--out", "--jobs"}},
      {"course", {"--kind", "--variant", "--width", "--wall-length", "--radius", "--seed",
                  "--clutter", "--out"}},
      {"serve", {"--config", "--seed", "--mode", "--port", "--address", "--record", "--realtime",
                 "--stream-hz"}},
  };
  for (const auto& [sub, names] : flags) {
    const auto help = run(sub + " --help");
    EXPECT_EQ(help.exit_code, 0) << sub;
    for (const auto& f : names) EXPECT_NE(help.output.find(f), std::string::npos) << sub << " " << f;
  }
}

TEST_F(CliTest, RunWritesOutputsIntoOutDir) {
  const auto cfg = write("w.json", kWall);
  const auto o = run("run --config '" + cfg.string() + "' --out '" + (dir_ / "out").string() + "'");
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "w.metrics.json"));
  const std::string csv = slurp(dir_ / "out" / "w.csv");
  EXPECT_EQ(csv.rfind("# papf-ballbot", 0), 0u);

  // A second run is byte-identical.
  const auto again = run("run --config '" + cfg.string() + "' --out '" + (dir_ / "again").string() + "'");
  ASSERT_EQ(again.exit_code, 0);
  EXPECT_EQ(slurp(dir_ / "again" / "w.csv"), csv);
}

TEST_F(CliTest, RunWithoutConfiguredPathsUsesTheWorkingDirectory) {
  const auto cfg = write("bare.json", R"({"episode": {"wall": {"distance": 5, "half_length": 3},
      "rider": {"kind": "aggressive"}, "timeout": 2}})");
  const auto o = run("run --config '" + cfg.string() + "' --seed 3 --mode no-sc", dir_);
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_NE(slurp(dir_ / "metrics.json").find("\"mode\": \"no-sc\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "trajectory.csv"));
}

TEST_F(CliTest, InvalidConfigExitsTwoAndNamesTheKey) {
  const auto cfg = write("bad.json", R"({"episode": {"course": "STN", "papf": {"epsilon": 2}}})");
  const auto o = run("run --config '" + cfg.string() + "'");
  EXPECT_EQ(o.exit_code, 2);
  EXPECT_NE(o.output.find("episode.papf.epsilon"), std::string::npos) << o.output;
  const auto missing = run("run --config /nonexistent/x.json");
  EXPECT_EQ(missing.exit_code, 2);
  EXPECT_NE(missing.output.find("/nonexistent/x.json"), std::string::npos);
  EXPECT_EQ(run("run").exit_code, 2);  // --config is required
  EXPECT_EQ(run("run --config '" + write("ok.json", kWall).string() + "' --mode warp").exit_code, 2);
  EXPECT_EQ(run("bogus").exit_code, 2);
}

TEST_F(CliTest, NumericAbortExitsThree) {
  const auto cfg = write("nan.json", R"({"episode": {"wall": {"distance": 5, "half_length": 3},
      "rider": {"kind": "aggressive", "aggressiveness": 1.0},
      "gains": {"lqr_k": [0, 1e308, 1e308, 0]}, "timeout": 5}})");
  const auto o = run("run --config '" + cfg.string() + "'", dir_);
  EXPECT_EQ(o.exit_code, 3) << o.output;
  EXPECT_NE(o.output.find("non-finite"), std::string::npos);
}

TEST_F(CliTest, UnwritableOutputExitsOne) {
  const auto cfg = write("w.json", R"({"episode": {"wall": {"distance": 5, "half_length": 3},
      "rider": {"kind": "aggressive"}, "timeout": 1},
      "output": {"trajectory_csv": "/dev/full"}})");
  EXPECT_EQ(run("run --config '" + cfg.string() + "'", dir_).exit_code, 1);
}

TEST_F(CliTest, BatchPrintsTableAndWritesSummary) {
  const auto cfg = write("b.json", R"({
    "episode": {"wall": {"distance": 5, "half_length": 3},
                "rider": {"kind": "aggressive", "aggressiveness": 0.3}, "timeout": 10},
    "batch": {"modes": ["no-sc", "papf-tracking"], "seeds": [1, 2]},
    "output": {"summary_csv": "s.csv"}})");
  const auto o = run("batch --config '" + cfg.string() + "' --jobs 2 --out '" + dir_.string() + "'");
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_NE(o.output.find("WALL/papf-tracking"), std::string::npos);
  EXPECT_NE(o.output.find("C_i"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "s.csv").find("metric,WALL/no-sc mean"), std::string::npos);
  EXPECT_EQ(run("batch --config '" + cfg.string() + "' --jobs 0").exit_code, 2);
  EXPECT_EQ(run("batch --config '" + write("w.json", kWall).string() + "'").exit_code, 2);
}

TEST_F(CliTest, CourseWritesJsonAndSegments) {
  const auto o = run("course --kind zigzag --variant narrow --out '" + dir_.string() + "'");
  ASSERT_EQ(o.exit_code, 0) << o.output;
  EXPECT_NE(slurp(dir_ / "zigzag-narrow.json").find("\"ZZN\""), std::string::npos);
  const std::string seg = slurp(dir_ / "zigzag-narrow.segments");
  EXPECT_EQ(std::count(seg.begin(), seg.end(), '\n'), 13);
  EXPECT_EQ(run("course --kind helix").exit_code, 2);
  EXPECT_EQ(run("course --width 0.4 --out '" + dir_.string() + "'").exit_code, 2);
}

// Binds a loopback port and keeps it until destroyed.
struct PortHolder {
  int fd = -1;
  int port = 0;
  PortHolder() {
    fd = socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
    listen(fd, 1);
    socklen_t len = sizeof a;
    getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
    port = ntohs(a.sin_port);
  }
  ~PortHolder() { close(fd); }
};

TEST_F(CliTest, BusyPortExitsFour) {
  PortHolder held;
  const auto cfg = write("w.json", kWall);
  const auto o = run("serve --config '" + cfg.string() + "' --port " + std::to_string(held.port));
  EXPECT_EQ(o.exit_code, 4) << o.output;
}

TEST_F(CliTest, ServeAnnouncesAndStopsOnSigterm) {
  const auto cfg = write("w.json", kWall);
  int out[2];
  ASSERT_EQ(pipe(out), 0);
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, out[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&fa, out[0]);
  const std::string cfg_s = cfg.string();
  std::vector<char*> argv = {const_cast<char*>(PAPF_CLI_PATH), const_cast<char*>("serve"),
                             const_cast<char*>("--config"), const_cast<char*>(cfg_s.c_str()),
                             const_cast<char*>("--port"), const_cast<char*>("0"), nullptr};
  pid_t pid;
  ASSERT_EQ(posix_spawn(&pid, PAPF_CLI_PATH, &fa, nullptr, argv.data(), environ), 0);
  posix_spawn_file_actions_destroy(&fa);
  close(out[1]);
  std::string line;
  char c;
  while (read(out[0], &c, 1) == 1 && c != '\n') line += c;
  close(out[0]);
  EXPECT_EQ(line.rfind("listening on ws://127.0.0.1:", 0), 0u) << line;
  EXPECT_NE(line.find("/session"), std::string::npos);
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
