#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include "ffd/core/error.hpp"
#include "ffd/core/hash.hpp"
#include "ffd/dataset/manifest.hpp"
#include "ffd/eval/report.hpp"
#include "ffd/model/layer_spec.hpp"
#include "ffd/synth/generator.hpp"
#include "ffd/train/trainer.hpp"

namespace ffd::run {

// Bad or unknown configuration; the CLI maps it to exit code 1.
class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct SynthSection {
  std::string output = "data/frames";
  std::size_t subjects_per_class = 40;
  std::size_t min_frames = synth::kMinFrames;
  std::size_t max_frames = synth::kMaxFrames;
};

struct BuildSection {
  std::string input = "data/frames";
  std::string output = "data/batches";
  SplitFractions fractions;
};

struct ModelSection {
  std::string preset = "paper";  // paper | narrow
  model::ArchitectureParams arch;
};

struct TrainSection {
  std::string data = "data/batches";
  std::string runs = "runs";
  train::TrainConfig config;
};

struct EvalSection {
  std::string data = "data/batches";
  std::string run;  // run directory; empty means the one train would produce
  std::string split = "test";
  std::string output = "report";  // relative to the run directory
  ClassLabel positive = ClassLabel::sleep;
  eval::NegativeSet negatives = eval::NegativeSet::control;
};

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

// Every field has a default, so an empty file is a valid config.
//
// Grammar: INI. "[section]" headers, "key = value" lines, ';' or '#'
// comments. Sections: global, synth, build, model, train, eval.
struct RunConfig {
  std::uint64_t seed = 1;
  SynthSection synth;
  BuildSection build;
  ModelSection model;
  TrainSection train;
  EvalSection eval;

  model::ModelConfig model_config() const { return model::make_model_config(model.arch); }

  // Resolved config in a fixed key order.
  std::string to_ini() const {
    std::ostringstream os;
    const auto& a = model.arch;
    const auto& t = train.config;
    os << "[global]\nseed = " << seed << "\n\n";
    os << "[synth]\noutput = " << synth.output << "\nsubjects_per_class = " << synth.subjects_per_class
       << "\nmin_frames = " << synth.min_frames << "\nmax_frames = " << synth.max_frames << "\n\n";
    os << "[build]\ninput = " << build.input << "\noutput = " << build.output
       << "\ntrain_fraction = " << format_number(build.fractions.train)
       << "\nvalidation_fraction = " << format_number(build.fractions.validation)
       << "\ntest_fraction = " << format_number(build.fractions.test) << "\n\n";
    os << "[model]\npreset = " << model.preset << "\ninput_height = " << a.input_height
       << "\ninput_width = " << a.input_width << "\ninput_channels = " << a.input_channels
       << "\nblock1 = " << a.block1 << "\nblock2 = " << a.block2 << "\nblock3 = " << a.block3
       << "\nblock4 = " << a.block4 << "\nlstm_units = " << a.lstm_units << "\ndense1 = " << a.dense1
       << "\ndense2 = " << a.dense2 << "\ndense3 = " << a.dense3 << "\nnum_classes = " << a.num_classes
       << "\nframes = " << a.frames << "\ndropout_rate = " << format_number(a.dropout_rate)
       << "\nbatchnorm_momentum = " << format_number(a.batchnorm_momentum) << "\n\n";
    os << "[train]\ndata = " << train.data << "\nruns = " << train.runs
       << "\nlearning_rate = " << format_number(t.learning_rate) << "\nbatch_size = " << t.batch_size
       << "\nbeta1 = " << format_number(t.beta1) << "\nbeta2 = " << format_number(t.beta2) << "\nepsilon = " << format_number(t.epsilon)
       << "\nmax_epochs = " << t.max_epochs << "\npatience = " << t.patience
       << "\naugmentation = " << (t.augmentation ? "true" : "false")
       << "\ninference_chunk = " << t.inference_chunk << "\n\n";
    os << "[eval]\ndata = " << eval.data << "\nrun = " << eval.run << "\nsplit = " << eval.split
       << "\noutput = " << eval.output << "\npositive = " << name(eval.positive)
       << "\nnegatives = " << (eval.negatives == eval::NegativeSet::control ? "control" : "all_other")
       << '\n';
    return os.str();
  }

  // Identifies a training run: model, train hyperparameters, data and seed.
  std::string train_hash() const {
    std::ostringstream os;
    os << std::setprecision(17) << seed << '|' << train.data << '|';
    const auto text = to_ini();
    const auto begin = text.find("[model]"), end = text.find("[eval]");
    os << text.substr(begin, end - begin);
    return Fnv1a().update(os.str()).hex();
  }

  std::string run_directory() const {
    return eval.run.empty() ? train.runs + "/run_" + train_hash() : eval.run;
  }
};

namespace detail {

template <class T>
T get(const boost::property_tree::ptree& section, const std::string& key, T fallback) {
  const auto v = section.get_optional<std::string>(key);
  if (!v) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw UsageError("config key " + key + ": expected true/false, got '" + *v + "'");
  } else {
    std::istringstream is(*v);
    T out{};
    if (!(is >> out) || !(is >> std::ws).eof())
      throw UsageError("config key " + key + ": cannot parse '" + *v + "'");
    if constexpr (std::is_unsigned_v<T>)
      if (v->find('-') != std::string::npos) throw UsageError("config key " + key + " must be non-negative");
    return out;
  }
}

inline void check_keys(const boost::property_tree::ptree& tree) {
  static const std::map<std::string, std::set<std::string>> known = {
      {"global", {"seed"}},
      {"synth", {"output", "subjects_per_class", "min_frames", "max_frames"}},
      {"build", {"input", "output", "train_fraction", "validation_fraction", "test_fraction"}},
      {"model", {"preset", "input_height", "input_width", "input_channels", "block1", "block2", "block3",
                 "block4", "lstm_units", "dense1", "dense2", "dense3", "num_classes", "frames",
                 "dropout_rate", "batchnorm_momentum"}},
      {"train", {"data", "runs", "learning_rate", "batch_size", "beta1", "beta2", "epsilon", "max_epochs",
                 "patience", "augmentation", "inference_chunk"}},
      {"eval", {"data", "run", "split", "output", "positive", "negatives"}}};
  for (const auto& [section, keys] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw UsageError("unknown config section [" + section + "]");
    for (const auto& [key, value] : keys)
      if (!it->second.count(key)) throw UsageError("unknown config key " + section + "." + key);
  }
}

}  // namespace detail

// Width presets. "narrow" keeps every layer kind and the head but shrinks
// the convolution blocks so training fits on a laptop CPU.
inline model::ArchitectureParams preset_architecture(const std::string& preset) {
  model::ArchitectureParams a;
  if (preset == "paper") return a;
  if (preset == "narrow") {
    a.block1 = 4, a.block2 = 8, a.block3 = 8, a.block4 = 8;
    return a;
  }
  throw UsageError("unknown model preset '" + preset + "' (paper|narrow)");
}

inline RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  detail::check_keys(tree);
  const boost::property_tree::ptree empty;
  auto sec = [&](const char* n) -> const boost::property_tree::ptree& {
    auto it = tree.find(n);
    return it == tree.not_found() ? empty : it->second;
  };
  using detail::get;
  RunConfig c;
  c.seed = get(sec("global"), "seed", c.seed);

  auto& s = c.synth;
  s.output = get(sec("synth"), "output", s.output);
  s.subjects_per_class = get(sec("synth"), "subjects_per_class", s.subjects_per_class);
  s.min_frames = get(sec("synth"), "min_frames", s.min_frames);
  s.max_frames = get(sec("synth"), "max_frames", s.max_frames);
  if (s.min_frames < synth::kMinFrames || s.max_frames > synth::kMaxFrames || s.min_frames > s.max_frames)
    throw UsageError("synth frame range must lie within [75, 150]");

  auto& b = c.build;
  b.input = get(sec("build"), "input", b.input);
  b.output = get(sec("build"), "output", b.output);
  b.fractions.train = get(sec("build"), "train_fraction", b.fractions.train);
  b.fractions.validation = get(sec("build"), "validation_fraction", b.fractions.validation);
  b.fractions.test = get(sec("build"), "test_fraction", b.fractions.test);

  auto& m = c.model;
  m.preset = get(sec("model"), "preset", m.preset);
  m.arch = preset_architecture(m.preset);
  auto& a = m.arch;
  const auto& ms = sec("model");
  a.input_height = get(ms, "input_height", a.input_height);
  a.input_width = get(ms, "input_width", a.input_width);
  a.input_channels = get(ms, "input_channels", a.input_channels);
  a.block1 = get(ms, "block1", a.block1);
  a.block2 = get(ms, "block2", a.block2);
  a.block3 = get(ms, "block3", a.block3);
  a.block4 = get(ms, "block4", a.block4);
  a.lstm_units = get(ms, "lstm_units", a.lstm_units);
  a.dense1 = get(ms, "dense1", a.dense1);
  a.dense2 = get(ms, "dense2", a.dense2);
  a.dense3 = get(ms, "dense3", a.dense3);
  a.num_classes = get(ms, "num_classes", a.num_classes);
  a.frames = get(ms, "frames", a.frames);
  a.dropout_rate = get(ms, "dropout_rate", a.dropout_rate);
  a.batchnorm_momentum = get(ms, "batchnorm_momentum", a.batchnorm_momentum);
  if (!(a.batchnorm_momentum >= 0 && a.batchnorm_momentum < 1))
    throw UsageError("model.batchnorm_momentum must lie in [0, 1)");
  if (a.input_height != kFrameHeight || a.input_width != kFrameWidth || a.input_channels != kChannels ||
      a.frames != kFramesPerSubsequence || a.num_classes != kNumClasses)
    throw UsageError("model input must match the batch format (8 x 140 x 210 x 3, 4 classes)");

  auto& t = c.train;
  const auto& ts = sec("train");
  t.data = get(ts, "data", t.data);
  t.runs = get(ts, "runs", t.runs);
  auto& tc = t.config;
  tc.learning_rate = get(ts, "learning_rate", tc.learning_rate);
  tc.batch_size = get(ts, "batch_size", tc.batch_size);
  tc.beta1 = get(ts, "beta1", tc.beta1);
  tc.beta2 = get(ts, "beta2", tc.beta2);
  tc.epsilon = get(ts, "epsilon", tc.epsilon);
  tc.max_epochs = get(ts, "max_epochs", tc.max_epochs);
  tc.patience = get(ts, "patience", tc.patience);
  tc.augmentation = get(ts, "augmentation", tc.augmentation);
  tc.inference_chunk = get(ts, "inference_chunk", tc.inference_chunk);

  auto& e = c.eval;
  const auto& es = sec("eval");
  e.data = get(es, "data", e.data);
  e.run = get(es, "run", e.run);
  e.split = get(es, "split", e.split);
  e.output = get(es, "output", e.output);
  try {
    split_from_name(e.split);
    e.positive = label_from_name(get<std::string>(es, "positive", "sleep"));
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
  if (e.positive == ClassLabel::control) throw UsageError("eval.positive must be an unfit class");
  const auto neg = get<std::string>(es, "negatives", "control");
  if (neg == "control")
    e.negatives = eval::NegativeSet::control;
  else if (neg == "all_other")
    e.negatives = eval::NegativeSet::all_other;
  else
    throw UsageError("eval.negatives must be control or all_other");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ffd::run
