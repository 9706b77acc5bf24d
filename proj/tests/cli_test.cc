// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/cli.h"

#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "patalloc/util.h"

namespace patalloc {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("patalloc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, ScoreTriangle) {
  auto r = run({"score", "--topology", "dgx1v", "--devices", "1+2+5", "--shape", "full"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("agg_bw       87.000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("x=1 y=1 z=1"), std::string::npos);
  EXPECT_NE(r.out.find("pred_effbw   24.108"), std::string::npos);
}

TEST_F(CliTest, ScoreRejectsBusyDevices) {
  auto r = run({"score", "--topology", "dgx1v", "--devices", "1+2", "--busy", "2"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, AllocatePreserveSensitive) {
  auto r = run({"allocate", "--topology", "dgx1v", "--policy", "preserve", "--gpus", "2",
                "--sensitive", "true"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("devices      1+4"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("39.080"), std::string::npos);
}

TEST_F(CliTest, AllocateNoCapacity) {
  auto r = run({"allocate", "--topology", "dgx1v", "--policy", "greedy", "--gpus", "3",
                "--busy", "1+2+3+4+5+6"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.rfind("no-capacity:", 0), 0u) << r.out;
}

TEST_F(CliTest, GenJobsIsByteDeterministic) {
  ASSERT_EQ(run({"gen-jobs", "--seed", "9", "--count", "40", "--out", path("a.csv")}).code, kExitOk);
  ASSERT_EQ(run({"gen-jobs", "--seed", "9", "--count", "40", "--out", path("b.csv")}).code, kExitOk);
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  EXPECT_EQ(split_lines(read_file(path("a.csv"))).size(), 41u);
}

TEST_F(CliTest, SimulateThenReport) {
  ASSERT_EQ(run({"gen-jobs", "--seed", "2", "--count", "30", "--out", path("jobs.csv")}).code, kExitOk);
  auto r = run({"simulate", "--topology", "dgx1v", "--policy", "preserve", "--jobs",
                path("jobs.csv"), "--out", path("log.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("true"), std::string::npos);
  auto first = read_file(path("log.csv"));
  ASSERT_EQ(run({"simulate", "--topology", "dgx1v", "--policy", "preserve", "--jobs",
                 path("jobs.csv"), "--out", path("log2.csv"), "--threads", "3"}).code, kExitOk);
  EXPECT_EQ(first, read_file(path("log2.csv")));

  r = run({"report", "--log", path("log.csv"), "--group-by", "gpus", "--out", path("s.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(read_file(path("s.json")).find("\"makespan_s\""), std::string::npos);
}

TEST_F(CliTest, FitWritesModel) {
  std::string samples = "x,y,z,measured_effbw_gbps\n";
  // Exact values of 5x + 2y + 3z + 10/(x+1) + 10/(y+1) on a 4x4x3 grid.
  int rows = 0;
  for (int x = 0; x <= 3; ++x) {
    for (int y = 0; y <= 3; ++y) {
      for (int z = 0; z <= 2; ++z) {
        samples += std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) + "," +
                   format_full(5 * x + 2 * y + 3 * z + 10.0 / (x + 1) + 10.0 / (y + 1)) + "\n";
        ++rows;
      }
    }
  }
  write_file_atomic(path("s.csv"), samples);
  auto r = run({"fit", "--samples", path("s.csv"), "--out", path("m.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("relative_error 0.0000"), std::string::npos) << r.out;
  ASSERT_TRUE(fs::exists(path("m.json")));
  auto s = run({"score", "--topology", "dgx1v", "--devices", "1+4", "--model", path("m.json")});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  EXPECT_NE(s.out.find("pred_effbw   20.000"), std::string::npos) << s.out;
  EXPECT_EQ(rows, 48);
}

TEST_F(CliTest, FitFailureLeavesNoOutput) {
  write_file_atomic(path("s.csv"), "1,0,0,30\n0,1,0,20\n");
  auto r = run({"fit", "--samples", path("s.csv"), "--out", path("m.json")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(fs::exists(path("m.json")));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename(), "s.csv");
  }
}

TEST_F(CliTest, SimulateFailureLeavesNoOutput) {
  write_file_atomic(path("jobs.csv"), "j1,9,ring,true,10,vgg16\n");
  auto r = run({"simulate", "--topology", "dgx1v", "--policy", "baseline", "--jobs",
                path("jobs.csv"), "--out", path("log.csv")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_FALSE(fs::exists(path("log.csv")));
}

TEST_F(CliTest, TopoInventoryAndDump) {
  auto r = run({"topo", "--name", "dgx1v"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("total bandwidth 744.000"), std::string::npos) << r.out;
  r = run({"topo", "--name", "dgx1v", "--dump"});
  ASSERT_EQ(r.code, kExitOk);
  write_file_atomic(path("t.json"), r.out);
  auto again = run({"topo", "--name", path("t.json"), "--dump"});
  EXPECT_EQ(again.out, r.out);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"allocate", "--topology", "dgx1v", "--policy", "best", "--gpus", "2"}).code,
            kExitUsage);
  EXPECT_EQ(run({"allocate", "--topology", "dgx1v", "--policy", "greedy"}).code, kExitUsage);
  EXPECT_EQ(run({"gen-jobs", "--seed", "1", "--count", "0", "--out", path("x")}).code, kExitUsage);
  EXPECT_EQ(run({"topo", "--name", "nosuchmachine"}).code, kExitFailure);
}

TEST_F(CliTest, HelpListsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"simulate", {"--topology", "--policy", "--jobs", "--out", "--model", "--group-by", "--threads"}},
      {"allocate", {"--topology", "--policy", "--gpus", "--shape", "--sensitive", "--busy", "--model", "--threads"}},
      {"score", {"--topology", "--devices", "--shape", "--busy", "--model"}},
      {"fit", {"--samples", "--out"}},
      {"gen-jobs", {"--seed", "--count", "--min-gpus", "--max-gpus", "--out"}},
      {"report", {"--log", "--group-by", "--out"}},
      {"topo", {"--name", "--dump"}},
  };
  for (const auto& [cmd, names] : flags) {
    auto r = run({cmd, "--help"});
    EXPECT_EQ(r.code, kExitOk) << cmd;
    for (const auto& f : names) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
}

}  // namespace
}  // namespace patalloc
