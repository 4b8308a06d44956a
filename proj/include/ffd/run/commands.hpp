#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ffd/core/error.hpp"
#include "ffd/core/hash.hpp"
#include "ffd/dataset/batch_io.hpp"
#include "ffd/dataset/batching.hpp"
#include "ffd/dataset/frame.hpp"
#include "ffd/dataset/manifest.hpp"
#include "ffd/dataset/subsequence.hpp"
#include "ffd/eval/report.hpp"
#include "ffd/model/checkpoint.hpp"
#include "ffd/run/config.hpp"
#include "ffd/synth/generator.hpp"
#include "ffd/synth/image_io.hpp"
#include "ffd/train/trainer.hpp"

namespace ffd::run {

namespace fs = std::filesystem;

// Dataset directory layout shared by synth and build:
//   <dir>/subjects.csv                 subject,label,frames,seed
//   <dir>/<subject>/frame_0001.png ... one greyscale or RGB PNG per frame
inline constexpr const char* kSubjectIndex = "subjects.csv";

inline std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.png", index);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::uint64_t subject_seed(std::uint64_t seed, const std::string& subject_id) {
  return Fnv1a().update(&seed, sizeof seed).update(subject_id).value();
}

struct SynthSummary {
  fs::path output;
  std::vector<synth::SyntheticSubjectSpec> subjects;
};

inline SynthSummary cmd_synth(const RunConfig& config, const fs::path& workdir, bool overwrite,
                              std::ostream& log) {
  SynthSummary out;
  out.output = workdir / config.synth.output;
  if (fs::exists(out.output) && !fs::is_empty(out.output)) {
    if (!overwrite)
      throw DataError("output directory " + out.output.string() + " is not empty (use --overwrite)");
    fs::remove_all(out.output);
  }
  fs::create_directories(out.output);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> frames(config.synth.min_frames, config.synth.max_frames);
  std::ostringstream index;
  index << "subject,label,frames,seed\n";
  for (auto label : kAllLabels) {
    for (std::size_t i = 1; i <= config.synth.subjects_per_class; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%03zu", std::string(name(label)).c_str(), i);
      synth::SyntheticSubjectSpec spec;
      spec.subject_id = id;
      spec.label = label;
      spec.frame_count = frames(rng);
      spec.seed = subject_seed(config.seed, spec.subject_id);
      const auto images = synth::generate_sequence(spec);
      const fs::path dir = out.output / spec.subject_id;
      fs::create_directories(dir);
      for (std::size_t k = 0; k < images.size(); ++k) write_gray_png(images[k], dir / frame_file_name(k + 1));
      index << spec.subject_id << ',' << name(label) << ',' << spec.frame_count << ',' << spec.seed << '\n';
      out.subjects.push_back(spec);
    }
    log << "synth: " << config.synth.subjects_per_class << " " << name(label) << " subjects\n";
  }
  write_text(out.output / kSubjectIndex, index.str());
  return out;
}

// Subject list of a dataset directory; frame counts come from the files on
// disk, not from the index.
inline std::vector<SubjectRecord> scan_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " does not exist");
  std::istringstream is(read_text(dir / kSubjectIndex));
  std::string line;
  std::getline(is, line);
  std::vector<SubjectRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    SubjectRecord r;
    std::string label;
    std::getline(row, r.subject_id, ',');
    std::getline(row, label, ',');
    try {
      r.label = label_from_name(label);
    } catch (const InvalidArgument& e) {
      throw DataError(std::string(kSubjectIndex) + ": " + e.what());
    }
    while (fs::exists(dir / r.subject_id / frame_file_name(r.frame_count + 1))) ++r.frame_count;
    out.push_back(r);
  }
  return out;
}

inline std::vector<Frame> load_subject_frames(const fs::path& dir, const SubjectRecord& s) {
  std::vector<Frame> frames;
  frames.reserve(s.frame_count);
  for (std::size_t k = 1; k <= s.frame_count; ++k)
    frames.push_back(resize_frame(read_png_rgb(dir / s.subject_id / frame_file_name(k)), k));
  return frames;
}

struct BuildSummary {
  DatasetManifest manifest;
  std::array<std::size_t, 3> batches{};
  std::array<std::size_t, 3> dropped{};
};

inline std::uint64_t split_seed(std::uint64_t seed, Split split) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(split) + 1;
}

// resize -> sub-sequences -> batches -> <output>/<split>/batch_NNNNN.ffdb
inline BuildSummary cmd_build(const RunConfig& config, const fs::path& workdir, std::ostream& log) {
  const fs::path in = workdir / config.build.input;
  const fs::path out = workdir / config.build.output;
  BuildSummary summary;
  summary.manifest = build_manifest(scan_dataset(in), config.build.fractions, config.seed);
  auto& manifest = summary.manifest;
  fs::create_directories(out);

  for (auto split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    const fs::path dir = out / std::string(name(split));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<SubSequence> subs;
    for (const auto& s : manifest.subjects_in(split)) {
      auto windows = build_subsequences(load_subject_frames(in, s), s.label, s.subject_id);
      subs.insert(subs.end(), std::make_move_iterator(windows.begin()), std::make_move_iterator(windows.end()));
    }
    std::ostringstream index;
    index << "file,slot,subject,label\n";
    if (subs.size() < kSubsequencesPerBatch) {
      manifest.warnings.push_back("split " + std::string(name(split)) + " has " + std::to_string(subs.size()) +
                                  " sub-sequences, no batch formed");
      summary.dropped[si] = subs.size();
    } else {
      const auto plan = plan_batches(subs.size(), split_seed(config.seed, split));
      for (std::size_t b = 0; b < plan.groups.size(); ++b) {
        char file[32];
        std::snprintf(file, sizeof file, "batch_%05zu.ffdb", b);
        write_batch_file(assemble_batch(subs, plan.groups[b]), dir / file);
        for (std::size_t s = 0; s < kSubsequencesPerBatch; ++s) {
          const auto& sub = subs[plan.groups[b][s]];
          index << file << ',' << s << ',' << sub.subject_id << ',' << name(sub.label) << '\n';
        }
      }
      summary.batches[si] = plan.groups.size();
      summary.dropped[si] = plan.dropped;
    }
    write_text(dir / "index.csv", index.str());
  }

  write_text(out / "manifest.txt", manifest.to_text());
  log << "subjects per class and split\n" << DatasetManifest::render_table(manifest.subject_counts());
  log << "sub-sequences per class and split\n" << DatasetManifest::render_table(manifest.sequence_counts());
  for (auto split : kAllSplits) {
    const auto si = static_cast<std::size_t>(split);
    log << name(split) << ": " << summary.batches[si] << " batches, " << summary.dropped[si]
        << " sub-sequences dropped\n";
  }
  for (const auto& w : manifest.warnings) log << "warning: " << w << '\n';
  return summary;
}

struct TrainSummary {
  fs::path run_dir;
  train::TrainResult result;
};

inline std::string run_manifest_text(const RunConfig& config, const train::Model& model) {
  const auto p = model::count_parameters(model);
  const auto& t = config.train.config;
  std::ostringstream os;
  os << "config_hash = " << config.train_hash() << "\nseed = " << config.seed
     << "\noptimizer = adam\nlearning_rate = " << format_number(t.learning_rate)
     << "\nbeta1 = " << format_number(t.beta1) << "\nbeta2 = " << format_number(t.beta2)
     << "\nepsilon = " << format_number(t.epsilon) << "\nbatch_size = " << t.batch_size
     << "\nmax_epochs = " << t.max_epochs << "\npatience = " << t.patience
     << "\naugmentation = " << (t.augmentation ? "true" : "false")
     << "\nloss = categorical_cross_entropy\nprobability_floor = " << train::kProbabilityFloor
     << "\nmodel_preset = " << config.model.preset << "\nparameters_cnn = " << p.cnn_total
     << "\nparameters_head = " << p.head_total << "\nparameters_total = " << p.total << '\n';
  return os.str();
}

inline TrainSummary cmd_train(const RunConfig& config, const fs::path& workdir, std::ostream& log) {
  const fs::path data = workdir / config.train.data;
  const train::BatchDirectory train_set(data / "train");
  const train::BatchDirectory val_set(data / "validation");
  if (train_set.size() == 0 || val_set.size() == 0)
    throw DataError("training needs batches in both " + (data / "train").string() + " and " +
                    (data / "validation").string());

  TrainSummary out;
  out.run_dir = workdir / config.train.runs / ("run_" + config.train_hash());
  fs::create_directories(out.run_dir);
  write_text(out.run_dir / "config.ini", config.to_ini());

  train::Model model(config.model_config(), config.seed);
  write_text(out.run_dir / "run_manifest.txt", run_manifest_text(config, model));
  auto tc = config.train.config;
  tc.seed = config.seed;
  train::TrainHooks hooks;
  hooks.on_epoch = [&](const train::EpochStats& s) {
    log << "epoch " << s.epoch << ": train_loss " << s.train_loss << ", val_loss " << s.val_loss
        << ", val_acc " << s.val_accuracy << std::endl;
  };
  out.result = train::train(model, tc, train_set, val_set, hooks);
  write_text(out.run_dir / "history.csv", train::history_csv(out.result.history));

  const auto& best = out.result.best;
  model::write_weights(best.weights, out.run_dir / "best.weights");
  std::ostringstream extra;
  extra << std::setprecision(17) << "epoch = " << best.epoch << "\nval_loss = " << best.val_loss << '\n';
  model::restore(model, best.weights);
  write_text(out.run_dir / "best.weights.txt", model::sidecar_text(model, extra.str()));
  log << "best epoch " << best.epoch << " (val_loss " << best.val_loss << "), run directory "
      << out.run_dir.string() << '\n';
  return out;
}

struct EvalSummary {
  fs::path report_dir;
  train::SplitEvaluation split;
  eval::EvalReport report;
};

inline EvalSummary cmd_eval(const RunConfig& config, const fs::path& workdir, std::ostream& log) {
  const fs::path run_dir = workdir / config.run_directory();
  const fs::path weights = run_dir / "best.weights";
  if (!fs::exists(weights)) throw DataError("checkpoint not found: " + weights.string());
  // The model is rebuilt from the config the run was trained with.
  const auto run_config = fs::exists(run_dir / "config.ini") ? load_config(run_dir / "config.ini") : config;

  train::Model model(run_config.model_config(), run_config.seed);
  model::restore(model, model::read_weights(weights));
  const train::BatchDirectory source(workdir / config.eval.data / config.eval.split);

  EvalSummary out;
  out.split = train::evaluate_split(model, source, run_config.train.config.inference_chunk);
  out.report = eval::build_report(out.split.records, {config.eval.positive, config.eval.negatives});
  out.report_dir = run_dir / config.eval.output;
  eval::write_report_bundle(out.report, out.split.records, out.report_dir);
  log << config.eval.split << ": loss " << out.split.loss << ", accuracy " << out.split.accuracy << '\n'
      << out.report.metrics_text();
  for (const auto& w : out.report.warnings) log << "warning: " << w << '\n';
  return out;
}

}  // namespace ffd::run
