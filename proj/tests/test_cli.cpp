#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "argbot/store.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout and stderr captured to a file.
Run cli(const testutil::TempDir& dir, const std::string& args) {
  const auto log = dir / "cli.log";
  const std::string cmd = std::string(ARGBOT_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = argbot::store::read_file(log);
  return r;
}

std::string write_config(const testutil::TempDir& dir) {
  const auto path = dir / "sim.conf";
  std::ofstream(path) << "profile = study2\nseed = 3\nassignment = blocked\nsim.groups_per_condition = 3\n";
  return path.string();
}

std::string common_flags() {
  return " --catalog " + testutil::config_file("catalog_healthcare.tsv").string() + " --aliases " +
         testutil::config_file("aliases_healthcare.tsv").string();
}

}  // namespace

TEST(Cli, FullBatchPipeline) {
  testutil::TempDir dir;
  const auto conf = write_config(dir);
  const auto store = (dir / "run").string();

  auto r = cli(dir, "simulate --config " + conf + " --out " + store + common_flags());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("rooms 15"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "run/manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "run/ground_truth.jsonl"));

  r = cli(dir, "annotate --store " + store + common_flags());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("\nagreement with planted arguments 1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("jaccard agreement with planted arguments 1.000000"), std::string::npos) << r.out;

  r = cli(dir, "export --store " + store);
  ASSERT_EQ(r.code, 0) << r.out;

  r = cli(dir, "analyze --store " + store + " --spec pooled --outcome unique_arguments");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Pooled Effect"), std::string::npos) << r.out;

  r = cli(dir, "analyze --store " + store + " --outcome all");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Contrasts"), std::string::npos) << r.out;

  r = cli(dir, "validate-sample --store " + store + " --n 100 --seed 1");
  ASSERT_EQ(r.code, 0) << r.out;
  fs::path review;
  for (const auto& e : fs::recursive_directory_iterator(dir / "run/derived")) {
    if (e.path().filename() == "sample_n100_seed1_review.tsv") review = e.path();
  }
  ASSERT_FALSE(review.empty());
  EXPECT_EQ(argbot::store::read_lines(review).size(), 101u);

  // Rerunning a stage with the same inputs is a no-op.
  r = cli(dir, "export --store " + store);
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, SameSeedSameTreeDifferentSeedRefused) {
  testutil::TempDir dir;
  const auto conf = write_config(dir);
  ASSERT_EQ(cli(dir, "simulate --config " + conf + " --out " + (dir / "a").string() + common_flags()).code, 0);
  ASSERT_EQ(cli(dir, "simulate --config " + conf + " --out " + (dir / "b").string() + common_flags()).code, 0);
  EXPECT_TRUE(argbot::store::same_tree(dir / "a", dir / "b"));

  // Same target again: identical tree, accepted.
  EXPECT_EQ(cli(dir, "simulate --config " + conf + " --out " + (dir / "a").string() + common_flags()).code, 0);
  auto r = cli(dir, "simulate --config " + conf + " --seed 4 --out " + (dir / "a").string() + common_flags());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("output-exists"), std::string::npos) << r.out;
  r = cli(dir, "simulate --config " + conf + " --seed 4 --force --out " + (dir / "a").string() + common_flags());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(argbot::store::same_tree(dir / "a", dir / "b"));
}

TEST(Cli, ErrorsAreReported) {
  testutil::TempDir dir;
  const auto conf = write_config(dir);
  auto r = cli(dir, "simulate --config " + conf + " --out " + (dir / "x").string() + " --catalog /nonexistent.tsv");
  EXPECT_NE(r.code, 0);
  r = cli(dir, "export --store " + dir.path().string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error [io]"), std::string::npos) << r.out;
  r = cli(dir, "");
  EXPECT_NE(r.code, 0);
}
