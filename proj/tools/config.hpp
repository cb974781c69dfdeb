#ifndef DEGELL_TOOLS_CONFIG_HPP
#define DEGELL_TOOLS_CONFIG_HPP

#include <json.hpp>
#include <optional>
#include <string>

#include "degell/boundary.hpp"
#include "degell/obstacle.hpp"

namespace degell::cli {

using nlohmann::json;

/// Schema violation; carries the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string task;
  uint64_t seed = 0;
  std::string output_dir = "out";
  Convention convention = Convention::c2s;

  json operator_spec;   // validated operator block
  json domain_spec;     // validated domain block (optional for kummer/sobolev/ibp)
  json task_spec;       // the task-specific block
  double eps_deg = -1.0;
  double eps_f = -1.0;
  double solver_tol = 1e-12;

  json raw;  // canonical parse for the digest
};

/// Parses and validates; unknown keys are rejected with their field path.
ExperimentConfig load_config(const std::string& path, const std::string& task);

OperatorSpec build_operator(const json& spec);
DomainGrid build_domain(const json& spec, int refine);

/// Constant or quadratic field from a config value:
/// number -> constant; {"quadratic": {offset, center, scale}} ->
/// offset - sum scale_i (x_i - center_i)^2.
ScalarField build_field(const json& value, const std::string& path);

uint64_t config_digest(const json& canonical);

}  // namespace degell::cli

#endif
