#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mlcg/config.hpp"
#include "mlcg/experiment.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* cfg = cmd->add_option("--config", c.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "built-in preset name")->excludes(cfg);
  cmd->add_option("--seed", c.seed, "override sampler.seed");
  cmd->add_option("--out", c.out, "override output.dir");
}

mlcg::ExperimentConfig load(const Common& c) {
  std::string text;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw mlcg::ConfigError("cannot read " + c.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  } else if (!c.preset.empty()) {
    text = mlcg::preset_text(c.preset);
  } else {
    throw mlcg::ConfigError("pass --config FILE or --preset NAME");
  }
  mlcg::ExperimentConfig cfg = mlcg::parse_config(text);
  if (c.seed) cfg.sampler.chain.seed = *c.seed;
  if (!c.out.empty()) cfg.output.dir = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-level coarse-grained Monte Carlo for lattice systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MLCG_VERSION));

  Common run_opts, verify_opts;
  std::string report_dir;
  bool list = false;
  bool print = false;

  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_common(run, run_opts);
  run->add_flag("--print-config", print, "print the resolved config and exit");

  auto* verify = app.add_subcommand("verify", "exact kernel checks on small instances");
  add_common(verify, verify_opts);

  auto* report = app.add_subcommand("report", "operation counts of a finished run");
  report->add_option("dir", report_dir, "run output directory")->required()->check(CLI::ExistingDirectory);

  auto* presets = app.add_subcommand("presets", "list built-in presets");
  presets->add_flag("--list", list);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*presets) {
      for (const auto& name : mlcg::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (*report) return mlcg::report_ops(report_dir, std::cout);
    if (*run) {
      const mlcg::ExperimentConfig cfg = load(run_opts);
      if (print) {
        std::cout << mlcg::serialize_config(cfg);
        return 0;
      }
      return mlcg::run_experiment(cfg, std::cerr);
    }
    if (*verify) {
      Common opts = verify_opts;
      if (opts.config_path.empty() && opts.preset.empty()) opts.preset = "tiny_verification";
      return mlcg::run_verification(load(opts), std::cout);
    }
  } catch (const mlcg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
