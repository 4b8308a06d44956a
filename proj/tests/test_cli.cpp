#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ffd/run/commands.hpp"
#include "support.hpp"

using namespace ffd;
using namespace ffd::run;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome ffd_cli(const fs::path& workdir, const std::string& args) {
  const auto out = workdir / "cli.out", err = workdir / "cli.err";
  const std::string cmd = std::string(FFD_CLI_PATH) + " --workdir " + workdir.string() + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
}

std::string tree_digest(const fs::path& dir) {
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), dir));
  Fnv1a h;
  for (const auto& f : files) h.update(f.string()).update(read_text(dir / f));
  return h.hex();
}

// Tiny network, short frames and one epoch: exercises every subcommand.
const char* kToyConfig = R"([global]
seed = 5
[synth]
subjects_per_class = 3
min_frames = 75
max_frames = 76
[build]
train_fraction = 0.34
validation_fraction = 0.33
test_fraction = 0.33
[model]
block1 = 2
block2 = 2
block3 = 2
block4 = 2
lstm_units = 8
dense1 = 16
dense2 = 8
dense3 = 8
batchnorm_momentum = 0.9
[train]
learning_rate = 0.001
batch_size = 16
max_epochs = 1
)";

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
  const auto dir = test::temp_dir("cli_usage");
  EXPECT_EQ(ffd_cli(dir, "").code, 1);
  EXPECT_EQ(ffd_cli(dir, "frobnicate").code, 1);
  EXPECT_EQ(ffd_cli(dir, "--bogus synth").code, 1);
  write_text(dir / "bad.ini", "[train]\nlernrate = 1\n");
  const auto r = ffd_cli(dir, "--config bad.ini config");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("train.lernrate"), std::string::npos) << r.err;
  EXPECT_EQ(ffd_cli(dir, "--config missing.ini config").code, 1);
}

TEST(Cli, DataErrorsExitWithTwo) {
  const auto dir = test::temp_dir("cli_data");
  const auto build = ffd_cli(dir, "build");
  EXPECT_EQ(build.code, 2);
  EXPECT_NE(build.err.find("data/frames"), std::string::npos) << build.err;
  const auto eval = ffd_cli(dir, "eval");
  EXPECT_EQ(eval.code, 2);
  EXPECT_NE(eval.err.find("checkpoint not found"), std::string::npos) << eval.err;
  EXPECT_NE(eval.err.find("best.weights"), std::string::npos) << eval.err;
}

TEST(Cli, ConfigCommandPrintsResolvedValuesAndSeedOverride) {
  const auto dir = test::temp_dir("cli_config");
  write_text(dir / "c.ini", kToyConfig);
  const auto r = ffd_cli(dir, "--config c.ini --seed 77 config");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("seed = 77"), std::string::npos);
  EXPECT_NE(r.out.find("learning_rate = 0.001"), std::string::npos);
  EXPECT_NE(r.out.find("batch_size = 16"), std::string::npos);
  EXPECT_NE(r.out.find("augmentation = false"), std::string::npos);
  // The printed text is itself a config that resolves to the same values.
  EXPECT_EQ(parse_config(r.out).to_ini(), r.out);
}

TEST(Config, DefaultsFollowTheTrainingProtocol) {
  const auto c = parse_config("");
  EXPECT_EQ(c.train.config.learning_rate, 1e-6);
  EXPECT_EQ(c.train.config.batch_size, 24u);
  EXPECT_EQ(c.train.config.max_epochs, 30u);
  EXPECT_FALSE(c.train.config.augmentation);
  EXPECT_EQ(c.model.preset, "paper");
  EXPECT_EQ(c.synth.subjects_per_class, 40u);
  EXPECT_EQ(c.eval.positive, ClassLabel::sleep);
}

TEST(Config, NumbersPrintShortestAndRoundTrip) {
  auto c = parse_config("");
  const auto text = c.to_ini();
  EXPECT_NE(text.find("train_fraction = 0.7\n"), std::string::npos) << text;
  EXPECT_NE(text.find("batchnorm_momentum = 0.99\n"), std::string::npos) << text;
  c.train.config.learning_rate = 0.1 + 0.2;
  EXPECT_EQ(parse_config(c.to_ini()).train.config.learning_rate, 0.1 + 0.2);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config("[nonsense]\na = 1\n"), UsageError);
  EXPECT_THROW(parse_config("[model]\nbatchnorm_momentum = 1\n"), UsageError);
  EXPECT_THROW(parse_config("[model]\ninput_width = 200\n"), UsageError);
  EXPECT_THROW(parse_config("[model]\npreset = huge\n"), UsageError);
  EXPECT_THROW(parse_config("[synth]\nmin_frames = 10\n"), UsageError);
  EXPECT_THROW(parse_config("[eval]\npositive = control\n"), UsageError);
  EXPECT_THROW(parse_config("[eval]\nsplit = holdout\n"), UsageError);
  EXPECT_THROW(parse_config("[train]\nbatch_size = -8\n"), UsageError);
  EXPECT_THROW(parse_config("[train]\naugmentation = maybe\n"), UsageError);
}

TEST(Config, RunDirectoryTracksTrainingInputsOnly) {
  auto a = parse_config(kToyConfig), b = a;
  b.eval.split = "validation";
  b.synth.subjects_per_class = 9;
  EXPECT_EQ(a.train_hash(), b.train_hash());
  b.train.config.learning_rate = 2e-3;
  EXPECT_NE(a.train_hash(), b.train_hash());
  b = a;
  b.seed = 6;
  EXPECT_NE(a.train_hash(), b.train_hash());
}

TEST(Synth, FortySubjectDirectoriesWithFrameCountsInRange) {
  const auto dir = test::temp_dir("synth_forty");
  auto c = parse_config("[synth]\nsubjects_per_class = 10\n");
  std::ostringstream log;
  const auto s = cmd_synth(c, dir, false, log);
  ASSERT_EQ(s.subjects.size(), 40u);
  std::size_t subject_dirs = 0;
  for (const auto& e : fs::directory_iterator(dir / "data/frames")) subject_dirs += e.is_directory();
  EXPECT_EQ(subject_dirs, 40u);
  const auto scanned = scan_dataset(dir / "data/frames");
  ASSERT_EQ(scanned.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(scanned[i].frame_count, s.subjects[i].frame_count);
    EXPECT_GE(scanned[i].frame_count, 75u);
    EXPECT_LE(scanned[i].frame_count, 150u);
  }
  EXPECT_EQ(scanned.front().subject_id, "alcohol_001");
  EXPECT_EQ(scanned.back().subject_id, "sleep_010");
}

TEST(Synth, SameSeedSameBytes) {
  const auto a = test::temp_dir("synth_a"), b = test::temp_dir("synth_b"), d = test::temp_dir("synth_d");
  auto c = parse_config("[synth]\nsubjects_per_class = 1\nmax_frames = 80\n");
  std::ostringstream log;
  cmd_synth(c, a, false, log);
  cmd_synth(c, b, false, log);
  c.seed = 2;
  cmd_synth(c, d, false, log);
  EXPECT_EQ(tree_digest(a / "data/frames"), tree_digest(b / "data/frames"));
  EXPECT_NE(tree_digest(a / "data/frames"), tree_digest(d / "data/frames"));
}

TEST(Synth, RefusesToOverwriteUnlessAsked) {
  const auto dir = test::temp_dir("synth_overwrite");
  write_text(dir / "c.ini", "[synth]\nsubjects_per_class = 1\nmax_frames = 75\n");
  ASSERT_EQ(ffd_cli(dir, "--config c.ini synth").code, 0);
  const auto again = ffd_cli(dir, "--config c.ini synth");
  EXPECT_EQ(again.code, 2);
  EXPECT_NE(again.err.find("--overwrite"), std::string::npos) << again.err;
  EXPECT_EQ(ffd_cli(dir, "--config c.ini synth --overwrite").code, 0);
}

TEST(Pipeline, EverySubcommandEndToEnd) {
  const auto dir = test::temp_dir("pipeline");
  write_text(dir / "c.ini", kToyConfig);
  ASSERT_EQ(ffd_cli(dir, "--config c.ini synth").code, 0);

  const auto build = ffd_cli(dir, "--config c.ini build");
  ASSERT_EQ(build.code, 0) << build.err;
  EXPECT_NE(build.out.find("sub-sequences per class and split"), std::string::npos);
  const auto manifest = DatasetManifest::parse(read_text(dir / "data/batches/manifest.txt"));
  std::size_t windows = 0;
  for (const auto& e : manifest.entries) windows += subsequence_count(e.subject.frame_count);
  std::size_t batches = 0;
  for (auto split : kAllSplits) {
    train::BatchDirectory d(dir / "data/batches" / std::string(name(split)));
    EXPECT_GT(d.size(), 0u) << name(split);
    batches += d.size();
  }
  EXPECT_LE(8 * batches, windows);
  EXPECT_GT(8 * batches, windows - 3 * 8);

  const auto train = ffd_cli(dir, "--config c.ini train");
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.out.find("epoch 1: train_loss"), std::string::npos);
  const auto cfg = parse_config(kToyConfig);
  const fs::path run = dir / cfg.run_directory();
  for (const char* f : {"config.ini", "run_manifest.txt", "history.csv", "best.weights", "best.weights.txt"})
    EXPECT_TRUE(fs::exists(run / f)) << f;
  EXPECT_EQ(parse_config(read_text(run / "config.ini")).to_ini(), cfg.to_ini());

  const auto eval = ffd_cli(dir, "--config c.ini eval");
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_NE(eval.out.find("EER = "), std::string::npos);
  std::set<std::string> files;
  for (const auto& e : fs::directory_iterator(run / "report")) files.insert(e.path().filename().string());
  EXPECT_EQ(files, std::set<std::string>(eval::report_artifacts().begin(), eval::report_artifacts().end()));

  // Re-running training and evaluation from the stored config reproduces the metrics.
  const auto first = read_text(run / "report/metrics.txt");
  fs::copy_file(run / "config.ini", dir / "again.ini");
  ASSERT_EQ(ffd_cli(dir, "--config again.ini train").code, 0);
  ASSERT_EQ(ffd_cli(dir, "--config again.ini eval").code, 0);
  EXPECT_EQ(read_text(run / "report/metrics.txt"), first);
}
