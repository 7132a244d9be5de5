// qsi: decoy-state security analysis, session simulation and ghost imaging.
//
// Settings are resolved as built-in defaults, then --config, then QSI_*
// environment variables, then the remaining command-line flags.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsi/commands.hpp"
#include "qsi/config.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> pulses;
  std::optional<std::uint64_t> frames;
};

void add_common(CLI::App& cmd, Flags& flags) {
  cmd.add_option("--config", flags.config_path, "INI-style config file")->check(CLI::ExistingFile);
  cmd.add_option("--seed", flags.seed, "RNG seed (sim.seed)");
  cmd.add_option("--out", flags.out, "output directory (output.dir)");
  cmd.add_option("--pulses", flags.pulses, "pulses per frame (sim.pulses_per_frame)");
  cmd.add_option("--frames", flags.frames, "frames (sim.frames)");
}

qsi::config::RunConfig resolve(const Flags& flags) {
  using namespace qsi::config;
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = load(flags.config_path, cfg);
  apply_env(cfg, [](const char* name) { return std::getenv(name); });
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.output_dir = *flags.out;
  if (flags.pulses) cfg.pulses_per_frame = *flags.pulses;
  if (flags.frames) cfg.frames = *flags.frames;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qsi::cli;
  CLI::App app{"decoy-state QKD security analysis and quantum-secured ghost imaging"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Flags flags;
  int (*command)(const qsi::config::RunConfig&, std::ostream&) = nullptr;
  auto bind = [&](const char* name, const char* help, auto fn) {
    auto* sub = app.add_subcommand(name, help);
    add_common(*sub, flags);
    sub->callback([&command, fn] { command = fn; });
  };
  bind("analyze", "closed-form bounds, SRM error floors and decoy inequalities", &cmd_analyze);
  bind("simulate", "Monte Carlo session and security verdict", &cmd_simulate);
  bind("image", "ghost-imaging reconstruction", &cmd_image);
  bind("attack-sweep", "verdicts over the intercepted-pulse fraction", &cmd_attack_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  qsi::config::RunConfig cfg;
  try {
    cfg = resolve(flags);
  } catch (const qsi::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return run_guarded(command, cfg, std::cout, std::cerr);
}
