// ffd: synth | build | train | eval
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "ffd/run/commands.hpp"

namespace {

struct Options {
  std::string workdir = ".";
  std::string config;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;
};

ffd::run::RunConfig resolve(const Options& o) {
  namespace fs = std::filesystem;
  auto c = o.config.empty() ? ffd::run::parse_config("")
                            : ffd::run::load_config(fs::path(o.workdir) / o.config);
  if (o.seed) c.seed = *o.seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fitness-for-duty CNN-LSTM pipeline"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--workdir", o.workdir, "Base directory for every relative path")->capture_default_str();
  app.add_option("--config", o.config, "INI config file, relative to --workdir");
  app.add_option("--seed", o.seed, "Overrides [global] seed");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic frame dataset");
  synth->add_flag("--overwrite", o.overwrite, "Replace a non-empty output directory");
  auto* build = app.add_subcommand("build", "Resize, window and batch a frame dataset");
  auto* train = app.add_subcommand("train", "Train and keep the minimum-validation-loss checkpoint");
  auto* eval = app.add_subcommand("eval", "Score a split and write the report bundle");
  auto* config = app.add_subcommand("config", "Print the fully resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto cfg = resolve(o);
    const std::filesystem::path workdir(o.workdir);
    if (synth->parsed()) ffd::run::cmd_synth(cfg, workdir, o.overwrite, std::cout);
    if (build->parsed()) ffd::run::cmd_build(cfg, workdir, std::cout);
    if (train->parsed()) ffd::run::cmd_train(cfg, workdir, std::cout);
    if (eval->parsed()) ffd::run::cmd_eval(cfg, workdir, std::cout);
    if (config->parsed()) std::cout << cfg.to_ini();
  } catch (const ffd::run::UsageError& e) {
    std::cerr << "ffd: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ffd: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
