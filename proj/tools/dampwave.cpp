// Command-line front end: one subcommand per experiment plus `run` (execute
// a config file as is, e.g. the echo in a manifest) and `compare`.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "dampwave/cli.hpp"
#include "dampwave/spectral.hpp"

namespace cli = dampwave::cli;

namespace {

struct CommandFlags {
  std::string config_path;
  std::map<std::string, std::optional<std::string>> values;
};

void add_key_flags(CLI::App* sub, CommandFlags& flags) {
  sub->add_option("-c,--config", flags.config_path, "key = value config file");
  for (const auto& key : cli::config_keys()) {
    if (key == "command") continue;
    sub->add_option("--" + key, flags.values[key], "overrides `" + key + "` in the config file");
  }
}

cli::ExperimentConfig build_config(const std::string& command, const CommandFlags& flags) {
  cli::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = cli::load_config(flags.config_path);
  if (!command.empty()) {
    if (!flags.config_path.empty() && !cfg.command.empty() && cfg.command != command)
      throw cli::ConfigError("command", "config file says '" + cfg.command + "' but the subcommand is " + command);
    cfg.command = command;
  }
  for (const auto& key : cli::config_keys()) {
    const auto it = flags.values.find(key);
    if (it != flags.values.end() && it->second) cli::set_field(cfg, key, *it->second);
  }
  return cfg;
}

int run(const cli::ExperimentConfig& cfg) {
  const cli::RunManifest m = cli::execute(cfg);
  std::printf("%s: %s in %.1f s, output in %s\n", cfg.command.c_str(), m.outcome.c_str(), m.wall_time,
              cli::resolve_output_dir(cfg).c_str());
  for (const auto& f : m.files) std::printf("  %-20s %s\n", f.name.c_str(), f.sha256.c_str());
  return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral lab for the strongly and weakly damped wave equation"};
  app.require_subcommand(1);

  std::map<std::string, CommandFlags> flags;
  for (const auto& name : cli::commands()) add_key_flags(app.add_subcommand(name), flags[name]);

  auto* run_cmd = app.add_subcommand("run", "execute a config file, taking the command from it");
  add_key_flags(run_cmd, flags["run"]);
  run_cmd->get_option("--config")->required();

  std::string path_a, path_b;
  auto* compare_cmd = app.add_subcommand("compare", "diff two manifests or output directories");
  compare_cmd->add_option("a", path_a)->required();
  compare_cmd->add_option("b", path_b)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    if (compare_cmd->parsed()) {
      const auto report = cli::compare(path_a, path_b);
      std::cout << cli::compare_to_jsonl(report);
      std::cerr << (report.identical() ? "identical\n" : std::to_string(report.files.size()) + " file(s) differ\n");
      return cli::kExitOk;
    }
    if (run_cmd->parsed()) return run(build_config("", flags["run"]));
    for (const auto& name : cli::commands())
      if (app.got_subcommand(name)) return run(build_config(name, flags[name]));
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitFailure;
  }
  return cli::kExitFailure;
}
