#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hybridgan/checkpoint.hpp"
#include "hybridgan/data.hpp"
#include "temp_dir.hpp"

using namespace hybridgan;
namespace fs = std::filesystem;
using hybridgan::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string err;
};

Result run_cli(const TempDir& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + HYBRIDGAN_CLI + "' " + args + " > '" + (dir / "stdout.txt").string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream text;
  text << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text.str()};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string tiny_model_overrides() {
  return " generator.base_filters=2 generator.num_resblocks=1 discriminator.layer_filters=2,4"
         " discriminator.layer_strides=2,1 data.load_size=8 data.crop_size=8 train.pool_capacity=2";
}

}  // namespace

TEST(Cli, SynthWritesManifest) {
  TempDir dir;
  const Result r = run_cli(dir, "synth --task region_texture --resolution 16 --paired 3 --unpaired 4 --test 2 --output " +
                                    q(dir / "data"));
  ASSERT_EQ(r.code, 0) << r.err;
  const DatasetManifest m = load_manifest(dir / "data" / "manifest.txt");
  EXPECT_EQ(m.num_paired(), 3u);
  EXPECT_EQ(m.num_unpaired_x(), 4u);
  EXPECT_TRUE(m.palette.has_value());
}

TEST(Cli, TrainRunsRequestedEpochs) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --resolution 8 --paired 2 --unpaired 2 --test 1 --output " + q(dir / "data")).code, 0);
  const Result r = run_cli(dir, "train run.manifest=" + q(dir / "data" / "manifest.txt") + " run.output_dir=" +
                                    q(dir / "out") + " train.total_epochs=2 train.paired_epochs=1"
                                    " train.lr_constant_epochs=1" + tiny_model_overrides());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "checkpoints" / "final.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "resolved_config.ini"));
  std::ifstream log(dir / "out" / "train.log");
  int max_epoch = 0;
  for (std::string line; std::getline(log, line);) max_epoch = std::max(max_epoch, std::stoi(line.substr(6)));
  EXPECT_EQ(max_epoch, 2);
}

TEST(Cli, MissingManifestIsReported) {
  TempDir dir;
  const fs::path missing = dir / "nowhere" / "manifest.txt";
  const Result r = run_cli(dir, "train run.manifest=" + q(missing) + " run.output_dir=" + q(dir / "out"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
}

TEST(Cli, TranslateHandlesEmptyAndMismatchedInput) {
  TempDir dir;
  ModelSpec spec;
  spec.x_channels = 1;
  spec.generator.base_filters = 2;
  spec.generator.num_resblocks = 1;
  spec.discriminator.layer_filters = {2, 4};
  spec.discriminator.layer_strides = {2, 1};
  save_checkpoint(make_train_state<float>(spec, TrainConfig{}, Phase::paired), dir / "m.ckpt");

  fs::create_directories(dir / "empty");
  const Result empty = run_cli(dir, "translate --checkpoint " + q(dir / "m.ckpt") + " --input " + q(dir / "empty") +
                                        " --output " + q(dir / "o") + " --direction x2y");
  EXPECT_EQ(empty.code, 0);
  EXPECT_NE(empty.err.find("warning"), std::string::npos);

  fs::create_directories(dir / "rgb");
  write_png(dir / "rgb" / "a.png", RgbImage(8, 8));
  const Result mismatch = run_cli(dir, "translate --checkpoint " + q(dir / "m.ckpt") + " --input " + q(dir / "rgb") +
                                           " --output " + q(dir / "o") + " --direction x2y");
  EXPECT_EQ(mismatch.code, 2) << mismatch.err;

  std::fstream f(dir / "m.ckpt", std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(4);
  f.put(char(0x7f));
  f.close();
  const Result version = run_cli(dir, "translate --checkpoint " + q(dir / "m.ckpt") + " --input " + q(dir / "rgb") +
                                          " --output " + q(dir / "o") + " --direction y2x");
  EXPECT_EQ(version.code, 3) << version.err;
}

TEST(Cli, EvaluateNeedsPalette) {
  TempDir dir;
  ASSERT_EQ(run_cli(dir, "synth --resolution 8 --paired 2 --unpaired 0 --test 1 --output " + q(dir / "data")).code, 0);
  save_checkpoint(make_train_state<float>(ModelSpec{}, TrainConfig{}, Phase::paired), dir / "m.ckpt");
  const Result r = run_cli(dir, "evaluate --checkpoint " + q(dir / "m.ckpt") + " --manifest " +
                                    q(dir / "data" / "manifest.txt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("palette"), std::string::npos) << r.err;
}

TEST(Cli, BadArgumentsExitWithConfigCode) {
  TempDir dir;
  EXPECT_EQ(run_cli(dir, "translate --checkpoint").code, 2);
  EXPECT_EQ(run_cli(dir, "frobnicate").code, 2);
  EXPECT_EQ(run_cli(dir, "train train.no_such_key=1 run.manifest=x").code, 2);
}
