#include "piccolo/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"piccolo: predictor-corrector online optimization experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, trace_csv, states_dir, csv_in, column, svg_out;
  std::uint64_t seed_override = 0;
  bool seed_set = false;

  auto* run_cmd = app.add_subcommand("run", "execute one experiment configuration");
  run_cmd->add_option("--config", config_path, "experiment config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seed", seed_override, "override run.base_seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* sweep_cmd = app.add_subcommand("sweep", "expand list-valued fields and run each combo");
  sweep_cmd->add_option("--config", config_path, "sweep config file")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* audit_cmd = app.add_subcommand("audit", "recompute bound audits from serialized states");
  audit_cmd->add_option("--trace", trace_csv, "trace.csv produced by run")->required();
  audit_cmd->add_option("--states", states_dir, "run output directory with states files")
      ->required();

  auto* render_cmd = app.add_subcommand("render", "render a csv column to a static svg chart");
  render_cmd->add_option("--in", csv_in, "input csv")->required();
  render_cmd->add_option("--col", column, "column to plot")->required();
  render_cmd->add_option("--out", svg_out, "output svg path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    if (!seed_set) return piccolo::run_experiment(config_path, out_dir);
    // rewrite the base seed by amending the parsed config in a temp overlay
    try {
      auto table = piccolo::load_config_file(config_path);
      piccolo::ConfigValue cv;
      cv.items = {std::to_string(seed_override)};
      table["run"]["base_seed"] = cv;
      auto cfg = piccolo::resolve_config(table);
      auto tmp = out_dir + "/.config_override";
      std::filesystem::create_directories(out_dir);
      {
        std::ofstream f(tmp);
        f << cfg.canonical_text();
      }
      return piccolo::run_experiment(tmp, out_dir);
    } catch (const piccolo::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }
  if (sweep_cmd->parsed()) return piccolo::run_sweep(config_path, out_dir);
  if (audit_cmd->parsed()) return piccolo::run_audit(trace_csv, states_dir);
  if (render_cmd->parsed()) return piccolo::run_render(csv_in, column, svg_out);
  return 1;
}
