// Exit-code contract of the command-line driver, run as a subprocess.

#include <sys/wait.h>

#include <cstdlib>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "httplib.h"

#include "dca/io.hpp"
#include "dca/mock_backend.hpp"
#include "test_util.hpp"

namespace dca {
namespace {

int run(const std::string& args) {
  const std::string cmd = fmt::format("{} {} >/dev/null 2>&1", DCA_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("generate"), 1);  // no dataset
  EXPECT_EQ(run("simulate --verbal-mode sideways"), 1);
  EXPECT_EQ(run("evaluate --out-dir /tmp/x --cell nocolons"), 1);
}

TEST(Cli, SimulateBuildPrefsEvaluate) {
  testing::TempDir dir;
  const auto d = dir.path().string();
  ASSERT_EQ(run(fmt::format("simulate --out-dir {}/run --questions 50 --verbal-bias 20 "
                            "--verbal-noise-sd 5 --seed 9",
                            d)),
            0);
  EXPECT_EQ(run(fmt::format("build-prefs --records {0}/run/records.jsonl --responses "
                            "{0}/run/responses.jsonl --out {0}/prefs.jsonl",
                            d)),
            0);
  EXPECT_EQ(run(fmt::format("evaluate --cell m:ds:{0}/run/records.jsonl --out-dir {0}/eval", d)),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "eval" / "report.md"));
}

TEST(Cli, DataErrors) {
  testing::TempDir dir;
  const auto d = dir.path().string();
  EXPECT_EQ(run(fmt::format("build-prefs --records {0}/none.jsonl --responses {0}/none.jsonl "
                            "--out {0}/p.jsonl",
                            d)),
            3);
  write_file_atomic(dir / "bad.jsonl", "{not json\n");
  EXPECT_EQ(run(fmt::format("generate --dataset {0}/bad.jsonl --out-dir {0}/run", d)), 3);
  EXPECT_EQ(run(fmt::format("evaluate --cell m:ds:{0}/missing.jsonl --out-dir {0}/eval", d)), 3);
}

TEST(Cli, UnreachableBackend) {
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  testing::TempDir dir;
  write_dataset(make_synthetic_questions(3, 0, 4, 1), dir / "q.jsonl");
  const std::string env = "DCA_RETRY_CAP=1 DCA_TIMEOUT_SECONDS=1 ";
  const std::string cmd =
      fmt::format("{}{} generate --backend remote --endpoint http://127.0.0.1:{} --model m "
                  "--dataset {} --out-dir {} >/dev/null 2>&1",
                  env, DCA_CLI_PATH, port, (dir / "q.jsonl").string(), (dir / "run").string());
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_FALSE(std::filesystem::exists(dir / "run" / "records.jsonl"));
}

}  // namespace
}  // namespace dca
