#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("perfex_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun perfex(const std::string& args, const std::string& env = "") const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = env + " " PERFEX_CLI " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  fs::path dir_;
};

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_F(Cli, GenerateTwoGaussianRowCount) {
  ASSERT_EQ(perfex("generate --preset two-gaussian --delta 3 --n 1000 --seed 7 --out " + path("g.csv")).code, 0);
  EXPECT_EQ(lines(slurp(path("g.csv"))), 2001u);
}

TEST_F(Cli, GenerateBlobsPaperSpec) {
  ASSERT_EQ(perfex("generate --preset blobs --seed 1 --out " + path("b.csv")).code, 0);
  const std::string text = slurp(path("b.csv"));
  EXPECT_EQ(lines(text), 10001u);
  EXPECT_EQ(text.substr(0, text.find('\n')), "x0,x1,__true__,__pred__,__score_0,__score_1,__score_2");
}

TEST_F(Cli, GenerateIsReproducible) {
  ASSERT_EQ(perfex("generate --preset example2d --seed 3 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(perfex("generate --preset example2d --seed 3 --out " + path("b.csv")).code, 0);
  ASSERT_EQ(perfex("generate --preset example2d --seed 4 --out " + path("c.csv")).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(Cli, FitAllCorrectIsSingleLeaf) {
  std::ofstream(path("ok.csv")) << "x,__true__,__pred__\n1,a,a\n2,b,b\n3,a,a\n";
  const CliRun r = perfex("fit --data " + path("ok.csv") + " --alpha 1 --out " + path("t.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("single leaf"), std::string::npos);
  EXPECT_EQ(r.out,
            "There are 3 datapoints for which the\n"
            "following conditions hold:\n"
            "  (no conditions — all datapoints)\n"
            "and for these datapoints accuracy is 1.00\n");
  EXPECT_TRUE(fs::exists(path("t.json")));
}

TEST_F(Cli, FitExample2dSplitsOnY) {
  ASSERT_EQ(perfex("generate --preset example2d --seed 1 --out " + path("e.csv")).code, 0);
  const CliRun r = perfex("fit --data " + path("e.csv") + " --out " + path("t.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tree = nlohmann::json::parse(slurp(path("t.json")));
  EXPECT_EQ(tree["root"]["name"], "y");
  EXPECT_EQ(tree["root"]["left"]["leaf"]["id"], 0);
  EXPECT_NE(r.out.find("  y <= "), std::string::npos);
  EXPECT_NE(r.out.find("  y > "), std::string::npos);
}

TEST_F(Cli, FitIsDeterministicAcrossThreads) {
  ASSERT_EQ(perfex("generate --preset blobs --n 4000 --seed 2 --out " + path("b.csv")).code, 0);
  const CliRun a = perfex("fit --data " + path("b.csv") + " --metric weighted_f1 --alpha 50 --out " + path("a.json"),
                       "PERFEX_THREADS=1");
  const CliRun b = perfex("fit --data " + path("b.csv") + " --metric weighted_f1 --alpha 50 --out " + path("b.json"),
                       "PERFEX_THREADS=4");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(Cli, EvaluateOnBuildSetHasZeroError) {
  ASSERT_EQ(perfex("generate --preset example2d --seed 5 --out " + path("e.csv")).code, 0);
  ASSERT_EQ(perfex("fit --data " + path("e.csv") + " --alpha 30 --out " + path("t.json")).code, 0);
  const CliRun r = perfex("evaluate --tree " + path("t.json") + " --build " + path("e.csv") + " --test " + path("e.csv") +
                       " --out " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mae 0.00"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("r.json")))["mae"], 0.0);
}

TEST_F(Cli, BlobsSplitProtocol) {
  ASSERT_EQ(perfex("generate --preset blobs --seed 3 --split --out " + path("b.csv")).code, 0);
  ASSERT_TRUE(fs::exists(path("b.train.csv")));
  ASSERT_EQ(perfex("fit --data " + path("b.test1.csv") + " --out " + path("t.json")).code, 0);
  const CliRun r = perfex("evaluate --tree " + path("t.json") + " --build " + path("b.test1.csv") + " --test " +
                       path("b.test2.csv") + " --out " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(nlohmann::json::parse(slurp(path("r.json")))["mae"].get<double>(), 0.05);
}

TEST_F(Cli, ExplainSavedTree) {
  ASSERT_EQ(perfex("generate --preset example2d --seed 1 --out " + path("e.csv")).code, 0);
  const CliRun fit = perfex("fit --data " + path("e.csv") + " --out " + path("t.json"));
  const CliRun again = perfex("explain --tree " + path("t.json") + " --json " + path("x.json"));
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(fit.out, again.out);
  const CliRun trips = perfex("explain --tree " + path("t.json") + " --data " + path("e.csv") + " --unit-noun trips");
  EXPECT_NE(trips.out.find("and for these trips accuracy is"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("x.json"))).size(), 2u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(perfex("").code, 2);
  EXPECT_EQ(perfex("fit").code, 2);
  EXPECT_EQ(perfex("frobnicate").code, 2);
  EXPECT_EQ(perfex("generate --preset moons --out " + path("m.csv")).code, 2);
  std::ofstream(path("ok.csv")) << "x,__true__,__pred__\n1,a,a\n2,b,a\n";
  EXPECT_EQ(perfex("fit --data " + path("ok.csv") + " --metric nope").code, 2);
  EXPECT_EQ(perfex("fit --data " + path("ok.csv") + " --max-depth 0").code, 2);

  const CliRun missing = perfex("fit --data " + path("absent.csv") + " --out " + path("t.json"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_FALSE(missing.err.empty());
  EXPECT_FALSE(fs::exists(path("t.json")));

  std::ofstream(path("bad.csv")) << "x,__true__,__pred__\n1,a,a\n,b,a\n";
  const CliRun bad = perfex("fit --data " + path("bad.csv") + " --alpha 1 --out " + path("t.json"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("row 2"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("t.json")));

  std::ofstream(path("broken.json")) << "{\"version\": 1}";
  EXPECT_EQ(perfex("explain --tree " + path("broken.json")).code, 1);
}
