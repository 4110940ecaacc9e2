#include "qmod/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"qmod: moduli, measures and distortion on hyperbolic quotients"};
  app.require_subcommand(1);

  std::string config_path, group_path, out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));

  auto* audit = app.add_subcommand("audit-group", "audit a group definition file");
  audit->add_option("group", group_path, "group definition (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    qmod::RunOptions opt;
    if (*seed_opt) opt.seed = seed;
    opt.threads = threads;
    opt.out_dir = out_dir;
    return qmod::run_config_file(config_path, opt, std::cout, std::cerr);
  }
  return qmod::audit_group_file(group_path, std::cout, std::cerr);
}
