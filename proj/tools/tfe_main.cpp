#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tfe/core_model.hpp"
#include "tfe/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solver and verification harness for the transformed shear-thinning thin-film equation"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized families");
  app.add_flag("--quiet", quiet, "suppress progress and check lines");

  std::string config;
  for (const char* name : {"run", "audit", "kernel-test", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config, "key=value configuration file")->required();
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  tfe::DriverOptions options;
  if (!out_dir.empty()) options.out_dir = out_dir;
  if (seed_opt->count() > 0) options.seed = seed;
  options.quiet = quiet;
  try {
    return tfe::run_command(app.get_subcommands().front()->get_name(), config, options, std::cout);
  } catch (const tfe::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
