#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include "test_support.hpp"

#ifndef ADEPT_CLI_PATH
#define ADEPT_CLI_PATH ""
#endif

namespace fs = std::filesystem;
using adept::testing::TempDir;
using adept::testing::slurp;

namespace {

struct Run {
  int code = 0;
  std::string out;
};

Run sh(const std::string& args) {
  const std::string cmd = std::string("\"") + ADEPT_CLI_PATH + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, "popen failed"};
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(ADEPT_CLI_PATH).empty()) GTEST_SKIP() << "CLI not built";
  }
};

TEST_F(Cli, FixturePipelineResume) {
  TempDir dir("adept-cli");
  const auto fx = dir / "fx";
  const auto out = dir / "out";
  auto r = sh("fixture --out " + fx.string() + " --n 8 --seed 3");
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"manifest.jsonl", "train.jsonl", "test.jsonl", "script.json", "truth.jsonl"})
    EXPECT_TRUE(fs::exists(fx / f)) << f;

  const std::string pipeline = "pipeline --train " + (fx / "train.jsonl").string() + " --manifest " +
                               (fx / "test.jsonl").string() + " --policy scripted:" + (fx / "script.json").string() +
                               " --rollouts 2 --seed 4 --out " + out.string();
  r = sh(pipeline);
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"labels.jsonl", "stats.json", "prior.json", "refs.json", "traj/trajectories.jsonl", "rewards.jsonl",
                        "report.json", "report.txt", "figures.json", "stages.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(r.out.find("skipped"), std::string::npos) << r.out;
  const auto report = slurp(out / "report.json");

  r = sh(pipeline + " --resume");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find(" ran"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(out / "report.json"), report);

  // A changed score parameter reruns score and everything after it.
  r = sh(pipeline + " --resume --weights C");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("run skipped"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("score ran"), std::string::npos) << r.out;
}

TEST_F(Cli, PriorQueryAndErrors) {
  TempDir dir("adept-cli");
  const auto fx = dir / "fx";
  ASSERT_EQ(sh("fixture --out " + fx.string() + " --n 20 --no-audio").code, 0);
  const auto prior = dir / "prior.json";
  auto r = sh("prior build --manifest " + (fx / "manifest.jsonl").string() + " --out " + prior.string());
  ASSERT_EQ(r.code, 0) << r.out;
  r = sh("prior query --prior " + prior.string() + " --candidates Anger,Sadness,Neutral");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("priority_pairs"), std::string::npos);
  r = sh("prior query --prior " + prior.string() + " --candidates Anger --anchor Fear");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("anchor_not_in_candidates"), std::string::npos) << r.out;
  r = sh("labels --manifest " + (fx / "manifest.jsonl").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("tie_rate"), std::string::npos) << r.out;
}
