#include <CLI11.hpp>
#include <cstdio>

#include "tasks.hpp"

using namespace degell::cli;

int main(int argc, char** argv) {
  CLI::App app{"degell: boundary-degenerate elliptic solver and verification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions opts;
  uint64_t seed_value = 0;
  bool seed_set = false;

  const char* tasks[] = {"classify", "solve", "obstacle", "verify",
                         "kummer",   "sobolev", "ibp"};
  const char* descriptions[] = {
      "Fichera/degeneracy classification of the domain boundary",
      "solve the boundary value problem with the configured plan",
      "solve the discrete obstacle problem by projected SOR",
      "run the maximum-principle property checks",
      "tabulate the confluent hypergeometric reference solution",
      "empirical power-weighted Sobolev inequality constant",
      "verify the weighted integration-by-parts identity"};

  for (size_t k = 0; k < std::size(tasks); ++k) {
    CLI::App* sub = app.add_subcommand(tasks[k], descriptions[k]);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", opts.out_override, "output directory override");
    sub->add_option("--seed", seed_value, "seed override")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    sub->add_option("--refine", opts.refine,
                    "grid refinement levels (doubles the node count per level)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string task = app.get_subcommands().front()->get_name();
  if (seed_set) opts.seed_override = seed_value;

  try {
    ExperimentConfig cfg = load_config(config_path, task);
    return run_task(std::move(cfg), opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
