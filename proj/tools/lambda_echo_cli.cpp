#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "lambda_echo/commands.hpp"

using namespace lambda_echo;

int main(int argc, char** argv) {
  CLI::App app{"Optically locked photon-echo simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  bool per_subgroup = false;
  auto* run = app.add_subcommand("run", "Simulate a JSON configuration");
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--out", out_dir, "Output directory (default: outputs.dir)");
  run->add_option("--format", format, "Artifact format")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--per-subgroup", per_subgroup, "Also write per-subgroup snapshots");

  std::string preset_name;
  std::string preset_out;
  auto* pre = app.add_subcommand("preset", "Materialize a named preset and run it");
  pre->add_option("name", preset_name, "Preset name")->required();
  pre->add_option("--out", preset_out, "Output directory")->required();
  pre->footer("Presets: fig1 fig3 fig4f two_pulse stimulated multi_data");

  std::string sweep_config;
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Sweep the read-pulse area");
  sweep->add_option("--config", sweep_config, "Configuration file")->required();
  sweep->add_option("--param", param, "Parameter path (read.area_pi)")->required();
  sweep->add_option("--from", from, "First value, units of pi")->required();
  sweep->add_option("--to", to, "Last value, units of pi")->required();
  sweep->add_option("--steps", steps, "Grid points (>= 2)")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*run) {
    RunOverrides overrides;
    if (!out_dir.empty()) overrides.out = out_dir;
    if (!format.empty()) overrides.format = parse_format(format);
    overrides.per_subgroup = per_subgroup;
    return cmd_run(config_path, overrides, std::cout, std::cerr);
  }
  if (*pre) return cmd_preset(preset_name, preset_out, std::cout, std::cerr);
  return cmd_sweep(sweep_config, param, from, to, steps, sweep_out, std::cout, std::cerr);
}
