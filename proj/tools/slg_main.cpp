#include <string>

#include "CLI11.hpp"
#include "slg/commands.hpp"

namespace {

void add_common(CLI::App* cmd, slg::CommandOptions& opt) {
  cmd->add_option("--config", opt.config_path, "configuration file");
  cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--tau-schedule", opt.tau_schedule,
                  "comma-separated tau descent, overrides the config")
      ->delimiter(',');
  cmd->add_option("--grid", opt.grid, "spatial points per axis, overrides the config");
  cmd->add_option("--time-grid", opt.time_grid, "time points, overrides the config");
  cmd->add_option("--jobs", opt.jobs, "worker threads for independent tau solves")
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "seed for random test instances")->capture_default_str();
  cmd->add_option("--kernel", opt.kernel, "kernel selection: auto | scalar | avx2")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak geodesics between Lagrangian graphs over the torus"};
  app.require_subcommand(1);

  slg::CommandOptions opt;
  std::string sweep_parameter;

  CLI::App* solve = app.add_subcommand("solve", "run the full solve pipeline");
  add_common(solve, opt);
  CLI::App* verify = app.add_subcommand("verify", "run the verification suite standalone");
  add_common(verify, opt);
  CLI::App* sweep = app.add_subcommand("sweep", "emit tau or grid trend tables");
  add_common(sweep, opt);
  sweep->add_option("parameter", sweep_parameter, "tau | grid")->required();
  CLI::App* selftest = app.add_subcommand("selftest", "config-free consistency checks");
  add_common(selftest, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slg::kExitConfig;
  }

  if (solve->parsed()) return slg::cmd_solve(opt);
  if (verify->parsed()) return slg::cmd_verify(opt);
  if (sweep->parsed()) return slg::cmd_sweep(opt, sweep_parameter);
  return slg::cmd_selftest(opt);
}
