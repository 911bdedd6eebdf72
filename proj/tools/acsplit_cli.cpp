// acsplit: batch front end for the stochastic Allen-Cahn splitting experiments.

#include "acsplit/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Splitting scheme experiments for the stochastic Allen-Cahn equation"};
  app.require_subcommand(1);

  std::string config_path;
  acsplit::CommandOverrides overrides;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the RNG seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
    sub->add_flag("--bit-repro", overrides.bit_repro, "Byte-identical outputs (omit timings)");
  };

  auto* run = app.add_subcommand("run", "Simulate one path and write a norm time series");
  auto* rates = app.add_subcommand("rates", "Estimate strong errors and fit the convergence rate");
  auto* probe = app.add_subcommand("probe", "Moment and exponential-integrability probes");
  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");
  add_common(run);
  add_common(rates);
  add_common(probe);
  std::string corrupt;
  selftest->add_option("--corrupt", corrupt, "Perturb the reference constant of one check")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : acsplit::kExitConfigError;
  }

  auto collect = [&](CLI::App* sub) {
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--out")) overrides.out_dir = out_dir;
    if (sub->count("--threads")) overrides.threads = threads;
  };

  if (*run) {
    collect(run);
    return acsplit::cmd_run(config_path, overrides, std::cout);
  }
  if (*rates) {
    collect(rates);
    return acsplit::cmd_rates(config_path, overrides, std::cout);
  }
  if (*probe) {
    collect(probe);
    return acsplit::cmd_probe(config_path, overrides, std::cout);
  }
  return acsplit::cmd_selftest(std::cout, corrupt);
}
