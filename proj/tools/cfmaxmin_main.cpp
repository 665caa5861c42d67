#include <CLI11.hpp>

#include <cfmaxmin/experiment.hpp>
#include <cfmaxmin/io.hpp>
#include <cfmaxmin/version.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> omega;
  std::optional<int> realizations;
  std::optional<int> workers;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override the base channel seed");
  cmd->add_option("--out", args.out_dir, "override the output directory");
  cmd->add_option("--omega", args.omega, "override the power rescaling (a number or M)");
  cmd->add_option("--realizations", args.realizations, "override the realization count");
  cmd->add_option("--workers", args.workers, "override the worker pool size");
}

cfmaxmin::Scenario resolve(const CommonArgs& args) {
  cfmaxmin::Scenario s = cfmaxmin::load_scenario(args.scenario_path);
  if (args.seed) s.network.rng_seed = *args.seed;
  if (args.out_dir) s.out_dir = *args.out_dir;
  if (args.omega) {
    const cfmaxmin::json j = (*args.omega == "M") ? cfmaxmin::json("M")
                                                  : cfmaxmin::json(std::stod(*args.omega));
    s.omegas = {cfmaxmin::OmegaSpec::from_json(j)};
  }
  if (args.realizations) s.num_realizations = *args.realizations;
  if (args.workers) s.workers = *args.workers;
  s.validate();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min SINR power control experiments for cell-free massive MIMO"};
  app.set_version_flag("--version", cfmaxmin::kVersion);
  app.require_subcommand(1);

  CommonArgs conv_args, cdf_args, timing_args, solve_args;
  CLI::App* conv = app.add_subcommand(
      "convergence", "per-iteration min-rate traces for the power solvers, fixed filters");
  attach_common(conv, conv_args);
  CLI::App* cdf = app.add_subcommand("cdf", "per-user rate CDF across channel realizations");
  attach_common(cdf, cdf_args);
  CLI::App* timing =
      app.add_subcommand("timing", "solver wall-time comparison across problem sizes");
  attach_common(timing, timing_args);
  CLI::App* solve = app.add_subcommand("solve", "solve one realization and dump the solution");
  attach_common(solve, solve_args);

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::path out;
    if (conv->parsed()) out = cfmaxmin::run_convergence(resolve(conv_args));
    if (cdf->parsed()) out = cfmaxmin::run_cdf(resolve(cdf_args));
    if (timing->parsed()) out = cfmaxmin::run_timing(resolve(timing_args));
    if (solve->parsed()) out = cfmaxmin::run_solve(resolve(solve_args));
    std::cout << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
