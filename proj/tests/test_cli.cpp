#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oad/evaluation.hpp"
#include "oad/image_io.hpp"
#include "oad/regressor.hpp"
#include "settings.hpp"

namespace oad {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("oad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary inside dir_; returns the exit status.
  int run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" OAD_CLI_PATH "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    out_ = slurp(dir_ / "stdout.txt");
    err_ = slurp(dir_ / "stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string out_, err_;
};

TEST(Settings, ParseAndOverride) {
  cli::Settings s = cli::Settings::parse("# comment\nseed = 7\n\nlevel=pm30  \nname = a = b\n");
  EXPECT_EQ(s.get_int("seed", 0), 7);
  EXPECT_EQ(s.get("level", ""), "pm30");
  EXPECT_EQ(s.get("name", ""), "a = b");
  s.set("seed", "9");
  EXPECT_EQ(s.get_u64("seed", 0), 9u);
  s.default_to("seed", "1");
  EXPECT_EQ(s.get("seed", ""), "9");
  s.default_to("epochs", "4");
  EXPECT_EQ(s.get_int("epochs", 0), 4);
  EXPECT_EQ(s.to_json().dump(), R"({"epochs":"4","level":"pm30","name":"a = b","seed":"9"})");
  EXPECT_DOUBLE_EQ(s.get_double("missing", 2.5), 2.5);
}

TEST(Settings, Errors) {
  EXPECT_THROW(cli::Settings::parse("just words\n"), InvalidArgument);
  EXPECT_THROW(cli::Settings::parse(" = 3\n"), InvalidArgument);
  const cli::Settings s = cli::Settings::parse("n = 12x\n");
  EXPECT_THROW(s.get_int("n", 0), InvalidArgument);
  EXPECT_THROW(s.require("other"), InvalidArgument);
  EXPECT_THROW(cli::Settings::load("/nonexistent/oad.cfg"), IoError);
}

TEST_F(Cli, SynthesizeIsByteDeterministic) {
  ASSERT_EQ(run("synthesize --kind stripes --n 100 --level pm45 --seed 7 --out a"), 0) << err_;
  ASSERT_EQ(run("synthesize --kind stripes --n 100 --level pm45 --seed 7 --out b"), 0) << err_;
  // The echoed config names the output directory, so compare entry lines.
  const std::string a = slurp(dir_ / "a" / "manifest.jsonl"), b = slurp(dir_ / "b" / "manifest.jsonl");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a.substr(a.find('\n')), b.substr(b.find('\n')));
  ASSERT_EQ(run("synthesize --kind stripes --n 100 --level pm45 --seed 7 --out a"), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "manifest.jsonl"), a);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "images" / "stripes_000099.png"));
  EXPECT_NE(a.find("\"seed\":\"7\""), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(dir_ / "run.cfg") << "kind = text_blocks\nn = 20\nseed = 3\nlevel = pm30\n";
  ASSERT_EQ(run("--config run.cfg synthesize --seed 4 --out d"), 0) << err_;
  const SplitManifest m = read_manifest(dir_ / "d" / "manifest.jsonl");
  EXPECT_EQ(m.seed, 4u);
  EXPECT_EQ(m.level, DifficultyLevel::pm30);
  EXPECT_EQ(m.entries.size(), 20u);
  EXPECT_NE(m.config_json.find("text_blocks"), std::string::npos);
}

TEST_F(Cli, ClassicalAtFullTurnIsRejected) {
  ASSERT_EQ(run("synthesize --n 20 --level full360 --out d"), 0);
  EXPECT_NE(run("evaluate --method hough-pow --level full360 --manifest d/manifest.jsonl"), 0);
  EXPECT_NE(err_.find("method not applicable"), std::string::npos) << err_;
  // Also when the level only comes from the manifest.
  EXPECT_NE(run("evaluate --method fourier --manifest d/manifest.jsonl"), 0);
  EXPECT_NE(err_.find("method not applicable"), std::string::npos) << err_;
}

TEST_F(Cli, MissingCheckpointNamesPath) {
  ImageU8 img(64, 64, 3, 100);
  write_png(dir_ / "in.png", img);
  EXPECT_NE(run("correct --checkpoint nowhere/model.oad --input in.png --output out.png"), 0);
  EXPECT_NE(err_.find("nowhere/model.oad"), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(dir_ / "out.png"));
}

TEST_F(Cli, BadArgumentsShowUsage) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("synthesize --bogus 1"), 0);
  EXPECT_NE(err_.find("--bogus"), std::string::npos) << err_;
  EXPECT_NE(run("synthesize --level pm90"), 0);
  EXPECT_NE(err_.find("pm90"), std::string::npos) << err_;
}

TEST_F(Cli, CorrectWithPerfectModelKeepsUprightImage) {
  // A model whose output layer is zeroed predicts exactly the pm45 centre, 0.
  Regressor model = build_model(desk_backbone(BackboneKind::tiny_desk_small, 64, 64),
                                HeadSpec::for_level(DifficultyLevel::pm45), 1);
  auto weights = model.weights();
  weights[weights.size() - 2].setZero();
  weights.back().setZero();
  ModelCheckpoint ckpt;
  ckpt.backbone = model.backbone_spec();
  ckpt.head = model.head_spec();
  ckpt.weights = weights;
  ckpt.model_seed = 1;
  save_checkpoint(dir_ / "zero.oad", ckpt);
  const ImageU8 img = synthesize_one(CorpusKind::gradient_scene, 5, 0, 80, 80).pixels;
  write_png(dir_ / "up.png", img);
  ASSERT_EQ(run("correct --checkpoint zero.oad --input up.png --output fixed.png"), 0) << err_;
  EXPECT_NE(out_.find("angle 0.0000"), std::string::npos) << out_;
  EXPECT_NE(out_.find("signed 0.0000"), std::string::npos) << out_;
  EXPECT_TRUE(read_image(dir_ / "fixed.png") == img);
  ASSERT_EQ(run("predict --checkpoint zero.oad --input up.png"), 0);
  EXPECT_NE(out_.find("angle 0.0000"), std::string::npos);
}

TEST_F(Cli, EstimateSingleImage) {
  const ImageU8 img = rotate_image(synthesize_one(CorpusKind::stripes, 2, 0).pixels, 12.0,
                                   FillPolicy::fill_black);
  write_png(dir_ / "s.png", img);
  ASSERT_EQ(run("estimate --method hough-var --input s.png"), 0) << err_;
  EXPECT_NEAR(std::stod(out_), 12.0, 1.0);
  EXPECT_NE(run("estimate --method hough-var --level full360 --input s.png"), 0);
}

TEST_F(Cli, EndToEndPipeline) {
  ASSERT_EQ(run("synthesize --kind stripes --n 60 --size 64 --level pm45 --seed 3 --out data"), 0) << err_;
  ASSERT_EQ(run("train --manifest data/manifest.jsonl --epochs 1 --batch-size 16 --out model"), 0) << err_;
  const std::string log = slurp(dir_ / "model" / "train_log.jsonl");
  EXPECT_NE(log.find("\"epoch\":1,\"train_loss\""), std::string::npos) << log;
  ASSERT_EQ(run("evaluate --method oad --checkpoint model/checkpoint.oad --manifest data/manifest.jsonl --out eval"), 0)
      << err_;
  for (const char* m : {"hough-var", "hough-pow", "fourier"})
    ASSERT_EQ(run(std::string("evaluate --method ") + m + " --manifest data/manifest.jsonl --out eval"), 0) << err_;
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "errors_fourier_pm45.png"));
  ASSERT_EQ(run("compare eval/report_OAD-45_pm45.jsonl eval/report_hough-var_pm45.jsonl "
                "eval/report_hough-pow_pm45.jsonl eval/report_fourier_pm45.jsonl --out eval"),
            0)
      << err_;
  const std::string csv = slurp(dir_ / "eval" / "comparison.csv");
  EXPECT_NE(csv.find("level,OAD-45,hough-var,hough-pow,fourier\npm45,"), std::string::npos) << csv;
  EXPECT_EQ(csv.rfind("# config: ", 0), 0u);
  const EvalReport r = read_report(dir_ / "eval" / "report_OAD-45_pm45.jsonl");
  EXPECT_NE(r.config_json.find("\"method\":\"oad\""), std::string::npos);
  const ModelCheckpoint ckpt = load_checkpoint(dir_ / "model" / "checkpoint.oad");
  EXPECT_NE(ckpt.config_json.find("\"manifest\""), std::string::npos);
  EXPECT_EQ(ckpt.history.size(), 1u);
}

TEST_F(Cli, AblateSmallGrid) {
  ASSERT_EQ(run("synthesize --n 30 --size 64 --level pm30 --seed 5 --out data"), 0) << err_;
  ASSERT_EQ(run("ablate --manifest data/manifest.jsonl --backbones tiny_desk_small --losses circular,l1 "
                "--epochs 1 --out abl"),
            0)
      << err_;
  const std::string csv = slurp(dir_ / "abl" / "ablation.csv");
  EXPECT_NE(csv.find("level,tiny_desk_small+circular,tiny_desk_small+l1\npm30,"), std::string::npos) << csv;
  EXPECT_TRUE(fs::exists(dir_ / "abl" / "report_tiny_desk_small+l1_pm30.jsonl"));
}

}  // namespace
}  // namespace oad
