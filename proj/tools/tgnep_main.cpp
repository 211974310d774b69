#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tgnep/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"time-discretized generalized Nash solver for dynamic market models"};
  app.require_subcommand(1);

  tgnep::CliOptions opt;
  std::string scenario_path, series_path;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path, "scenario file")->required();
    cmd->add_option("--out-dir", opt.out_dir, "directory for report artifacts");
    cmd->add_option("--override", opt.overrides,
                    "section.key=value replacement, repeatable");
    cmd->add_option("--tolerance", "key=value tolerance replacement, repeatable")
        ->each([&](const std::string& kv) {
          opt.overrides.push_back("tolerances." + kv);
        });
    cmd->add_option("--seed", seed_value, "replace the scenario seed")
        ->each([&](const std::string&) { opt.seed = seed_value; });
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a scenario and certify the result");
  add_common(solve);

  CLI::App* verify = app.add_subcommand("verify", "re-certify a solved series file");
  add_common(verify);
  verify->add_option("series", series_path, "series csv produced by solve")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "exhaustive grid search on tiny models");
  add_common(oracle);
  oracle->add_option("--resolution", opt.oracle_resolution, "grid points per coordinate");
  oracle->add_option("--compare", opt.compare_series, "series csv to compare against");
  oracle->add_option("--cells", opt.compare_cells, "allowed distance in grid cells");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed())
    return tgnep::run_solve(scenario_path, opt, std::cout, std::cerr);
  if (verify->parsed())
    return tgnep::run_verify(scenario_path, series_path, opt, std::cout, std::cerr);
  return tgnep::run_oracle(scenario_path, opt, std::cout, std::cerr);
}
