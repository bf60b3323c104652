#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "panograph/cli.hpp"

namespace {

namespace fs = std::filesystem;
using panograph::cli::cli_dispatch;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("panograph_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const auto r = run({"synth", "--out"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"eval", "--data", "x", "--split", "test", "--ckpt", "y"}).code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, RuntimeErrorsExitOne) {
  const auto r = run({"features", "--data", "/nonexistent/panograph"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST(Cli, SynthWritesDataset) {
  const auto dir = scratch_dir("cli_synth");
  ASSERT_EQ(run({"synth", "--out", dir.string()}).code, 0);
  std::size_t pgt = 0, jsonl = 0;
  for (const auto& e : fs::directory_iterator(dir)) pgt += e.path().extension() == ".pgt";
  for (const auto& e : fs::directory_iterator(dir / "detections")) jsonl += e.path().extension() == ".jsonl";
  EXPECT_EQ(pgt, 64u);
  EXPECT_EQ(jsonl, 64u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));

  ASSERT_EQ(run({"reassign", "--data", dir.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "reassigned" / "sample_0000.pgt"));
  EXPECT_TRUE(fs::exists(dir / "reassigned" / "sample_0000.json"));
  ASSERT_EQ(run({"features", "--data", dir.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "features" / "sample_0063.pgt"));
  fs::remove_all(dir);
}

TEST(Cli, SingleStreamReassign) {
  const auto dir = scratch_dir("cli_single");
  ASSERT_EQ(run({"synth", "--out", dir.string(), "--per-class", "1"}).code, 0);
  const auto out = dir / "one.pgt";
  const auto r = run({"reassign", "--input", (dir / "detections" / "sample_0000.jsonl").string(), "--output",
                      out.string(), "--persons", "3", "--joints", "5", "--objects", "1", "--frames", "16"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out));
  fs::remove_all(dir);
}

TEST(Cli, GradcheckPasses) {
  const auto r = run({"gradcheck", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("model"), std::string::npos);
}

}  // namespace
