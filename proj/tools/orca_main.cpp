#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "orca/commands.hpp"
#include "orca/error.hpp"
#include "orca/io.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run configuration (TOML)");
  cmd->add_option("--seed", o.seed, "Master RNG seed");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
}

orca::RunConfig resolve(const CommonOptions& o) {
  orca::RunConfig cfg = o.config.empty() ? orca::RunConfig{} : orca::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate();
  return cfg;
}

int fail(orca::ErrorKind kind, const std::string& message) {
  std::cerr << orca::error_json(kind, message).dump() << '\n';
  return orca::exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Telecom off-resonant cascaded absorption memory simulator", "orca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", orca::artifact_version);

  CommonOptions common;
  auto* simulate = app.add_subcommand("simulate", "Store and retrieve one pulse and synthesize its histograms");
  auto* sweep = app.add_subcommand("sweep", "Scan storage time, control energy or input photon number");
  auto* analyze = app.add_subcommand("analyze", "Extract figures of merit from three histograms");
  auto* optimize = app.add_subcommand("optimize", "Search control shapes or the energy ratio");
  for (auto* cmd : {simulate, sweep, analyze, optimize}) add_common(cmd, common);

  std::string input, memory, noise, resume;
  analyze->add_option("--input", input, "Input reference histogram")->required();
  analyze->add_option("--memory", memory, "Memory histogram")->required();
  analyze->add_option("--noise", noise, "Noise histogram")->required();
  optimize->add_option("--resume", resume, "Trace of an earlier run to reuse");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(orca::ErrorKind::config, e.what());
  }

  try {
    const orca::RunConfig cfg = resolve(common);
    const std::filesystem::path out = cfg.output_dir;
    if (simulate->parsed()) {
      const auto p = orca::cmd_simulate(cfg, out);
      std::cout << p.figures.dump(2) << '\n';
    } else if (sweep->parsed()) {
      std::cout << orca::cmd_sweep(cfg, out).string() << '\n';
    } else if (analyze->parsed()) {
      std::cout << orca::cmd_analyze(cfg, input, memory, noise).dump(2) << '\n';
    } else if (optimize->parsed()) {
      std::cout << orca::cmd_optimize(cfg, out, resume).dump(2) << '\n';
    }
  } catch (const orca::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(orca::ErrorKind::numerical, e.what());
  }
  return 0;
}
