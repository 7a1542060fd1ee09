#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HIERLAB_CLI_PATH;

int run(const std::string& args) {
  const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string without_clock(std::string s) {
  static const std::regex clock(R"("wall_clock_s":[^,}]*)");
  return std::regex_replace(s, clock, "");
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("hierlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string train(const std::string& out) const {
    return "train --task point_reach --variant \"Baseline [HER]\" --variant \"HiER [HER]\" --seeds 0-2"
           " --override run.total_steps=300 --override run.warmup_steps=50 --override run.eval_points=2"
           " --override run.eval_episodes=2 --override agent.batch_size=16 --override agent.hidden=16"
           " --out-dir " + (dir_ / out).string();
  }

  fs::path dir_;
};

std::vector<fs::path> jsonl_in(const fs::path& d) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(d))
    if (e.path().extension() == ".jsonl") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_F(Cli, TrainAggregatePlotPipeline) {
  ASSERT_EQ(run(train("a")), 0);
  const auto files = jsonl_in(dir_ / "a");
  ASSERT_EQ(files.size(), 6u);
  EXPECT_EQ(files[0].filename(), "point-reach_sac_baseline-her_0.jsonl");

  ASSERT_EQ(run(train("b")), 0);
  const auto again = jsonl_in(dir_ / "b");
  ASSERT_EQ(again.size(), 6u);
  for (std::size_t i = 0; i < files.size(); ++i)
    EXPECT_EQ(without_clock(slurp(files[i])), without_clock(slurp(again[i]))) << files[i];

  const auto csv = dir_ / "agg.csv";
  ASSERT_EQ(run("aggregate --run-dir " + (dir_ / "a").string() + " --resamples 200 --out " + csv.string()), 0);
  std::istringstream rows(slurp(csv));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "variant,metric,value,ci_lo,ci_hi");
  int n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, 8);

  for (const std::string kind : {"learning_curve", "profile", "prob_improvement", "agg_bars"}) {
    const auto svg1 = dir_ / (kind + "_1.svg"), svg2 = dir_ / (kind + "_2.svg");
    const std::string common = " --run-dir " + (dir_ / "a").string() + " --kind " + kind + " --resamples 200 --out ";
    ASSERT_EQ(run("plot" + common + svg1.string()), 0) << kind;
    ASSERT_EQ(run("plot" + common + svg2.string()), 0) << kind;
    EXPECT_EQ(slurp(svg1), slurp(svg2)) << kind;
    EXPECT_NE(slurp(svg1).find("<svg"), std::string::npos);
    EXPECT_TRUE(fs::exists(fs::path(svg1).replace_extension(".csv"))) << kind;
  }
}

TEST_F(Cli, ErrorsExitNonZero) {
  EXPECT_EQ(run(train("c") + " --override agent.warp=3"), 2);
  const auto cfg = dir_ / "bad.cfg";
  std::ofstream(cfg) << "[matrix]\ntasks = point_reach\n[agent]\nwarp = 1\n";
  EXPECT_EQ(run("train --config " + cfg.string() + " --out-dir " + (dir_ / "c").string()), 2);
  EXPECT_EQ(run("aggregate --run-dir " + (dir_ / "empty").string()), 2);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST(CliInfo, ListsTasksAndKeys) {
  EXPECT_EQ(run("list-tasks"), 0);
  EXPECT_EQ(run("list-keys --markdown"), 0);
}
