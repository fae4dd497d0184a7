#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nch/config.hpp"
#include "nch/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonisothermal Cahn-Hilliard heat-source control"};
  app.set_version_flag("--version", nch::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<double> eps_list;
  std::string mode;
  bool quick = false;
  std::string battery_out = "battery";
  std::string run_dir;

  auto* simulate = app.add_subcommand("simulate", "Solve the state system for the configured control");
  simulate->add_option("--config", config_path, "INI configuration")->required();

  auto* optimize = app.add_subcommand("optimize", "Projected-gradient optimal control");
  optimize->add_option("--config", config_path, "INI configuration")->required();

  auto* grad = app.add_subcommand("grad-check", "Adjoint gradient against central differences");
  grad->add_option("--config", config_path, "INI configuration")->required();
  grad->add_option("--eps-list", eps_list, "Step sizes (overrides checks.eps_list)");

  auto* adj = app.add_subcommand("adjoint-check", "Duality identity <h, r> = tracking pairing");
  adj->add_option("--config", config_path, "INI configuration")->required();
  adj->add_option("--mode", mode, "Adjoint mode")->check(CLI::IsMember({"transpose", "continuous"}));

  auto* battery = app.add_subcommand("battery", "Run every verification check");
  battery->add_flag("--quick", quick, "Smaller instances");
  battery->add_option("--out", battery_out, "Summary directory (relative to $NCH_OUTPUT_ROOT)");

  auto* plots = app.add_subcommand("emit-plots", "Write gnuplot column files for a finished run");
  plots->add_option("run_dir", run_dir, "Run directory")->required();

  auto* defaults = app.add_subcommand("print-config", "Print the configuration schema with defaults");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*defaults) {
      std::cout << nch::default_config_text();
      return nch::kExitOk;
    }
    if (*battery) {
      return nch::run_battery_command(quick, nch::resolve_output_dir(battery_out), std::cout);
    }
    if (*plots) {
      const auto files = nch::emit_plot_data(run_dir);
      std::cout << "wrote " << files.size() << " file(s) to " << (std::filesystem::path(run_dir) / "plots").string()
                << "\n";
      return nch::kExitOk;
    }
    const nch::RunConfig cfg = nch::parse_config(config_path);
    if (*simulate) return nch::run_simulate(cfg, std::cout);
    if (*optimize) return nch::run_optimize(cfg, std::cout);
    if (*grad) {
      std::optional<std::vector<double>> eps;
      if (!eps_list.empty()) eps = eps_list;
      return nch::run_grad_check(cfg, eps, std::cout);
    }
    std::optional<nch::AdjointMode> m;
    if (!mode.empty()) m = nch::adjoint_mode_from_string(mode);
    return nch::run_adjoint_check(cfg, m, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nch::exit_code_for(e);
  }
}
