#ifndef DEGELL_TOOLS_TASKS_HPP
#define DEGELL_TOOLS_TASKS_HPP

#include "config.hpp"

namespace degell::cli {

struct RunOptions {
  std::string out_override;
  std::optional<uint64_t> seed_override;
  int refine = 0;
};

/// Executes a validated config; writes its artifacts and manifest.json.
/// Returns the process exit code (0 ok, 1 computation failure).
int run_task(ExperimentConfig cfg, const RunOptions& opts);

}  // namespace degell::cli

#endif
