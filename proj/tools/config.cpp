#include "config.hpp"

#include <fstream>
#include <set>

namespace degell::cli {

namespace {

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed,
                  const std::set<std::string>& required = {}) {
  if (!obj.is_object()) {
    throw ConfigError(path + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ConfigError(path + "." + key + ": unknown key");
    }
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw ConfigError(path + "." + key + ": missing required key");
    }
  }
}

double number_at(const json& obj, const std::string& path, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(path + "." + key + ": missing required key");
  }
  if (!obj[key].is_number()) {
    throw ConfigError(path + "." + key + ": expected a number");
  }
  return obj[key].get<double>();
}

Eigen::VectorXd vector_at(const json& obj, const std::string& path,
                          const std::string& key, int expect = -1) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw ConfigError(path + "." + key + ": expected an array of numbers");
  }
  const auto& arr = obj[key];
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ConfigError(path + "." + key + ": expected a number at index " +
                        std::to_string(i));
    }
    v[i] = arr[i].get<double>();
  }
  if (expect >= 0 && v.size() != expect) {
    throw ConfigError(path + "." + key + ": expected " + std::to_string(expect) +
                      " entries");
  }
  return v;
}

Eigen::MatrixXd matrix_at(const json& obj, const std::string& path,
                          const std::string& key, int d) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw ConfigError(path + "." + key + ": expected a matrix (array of rows)");
  }
  Eigen::MatrixXd m(d, d);
  const auto& rows = obj[key];
  if (static_cast<int>(rows.size()) != d) {
    throw ConfigError(path + "." + key + ": expected " + std::to_string(d) + " rows");
  }
  for (int i = 0; i < d; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw ConfigError(path + "." + key + ": row " + std::to_string(i) +
                        " must have " + std::to_string(d) + " entries");
    }
    for (int j = 0; j < d; ++j) m(i, j) = row[j].get<double>();
  }
  return m;
}

}  // namespace

ExperimentConfig load_config(const std::string& path, const std::string& task) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }

  const std::set<std::string> tasks = {"classify", "solve",  "obstacle", "verify",
                                       "kummer",   "sobolev", "ibp"};
  require_keys(doc, "config",
               {"task", "seed", "output_dir", "convention", "operator", "domain",
                "tolerances", "classify", "solve", "obstacle", "verify", "kummer",
                "sobolev", "ibp"});

  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.task = task;
  if (doc.contains("task")) {
    if (!doc["task"].is_string() || !tasks.count(doc["task"].get<std::string>())) {
      throw ConfigError("config.task: unknown task");
    }
    if (doc["task"].get<std::string>() != task) {
      throw ConfigError("config.task: does not match the requested subcommand");
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      throw ConfigError("config.seed: expected a non-negative integer");
    }
    cfg.seed = doc["seed"].get<uint64_t>();
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) {
      throw ConfigError("config.output_dir: expected a string");
    }
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("convention")) {
    const std::string c = doc["convention"].get<std::string>();
    if (c == "fichera") {
      cfg.convention = Convention::fichera;
    } else if (c == "c2s") {
      cfg.convention = Convention::c2s;
    } else {
      throw ConfigError("config.convention: expected 'fichera' or 'c2s'");
    }
  }
  if (doc.contains("tolerances")) {
    const json& tol = doc["tolerances"];
    require_keys(tol, "config.tolerances", {"eps_deg", "eps_f", "solver_tol"});
    cfg.eps_deg = number_at(tol, "config.tolerances", "eps_deg", -1.0);
    cfg.eps_f = number_at(tol, "config.tolerances", "eps_f", -1.0);
    cfg.solver_tol = number_at(tol, "config.tolerances", "solver_tol", 1e-12);
  }

  const bool needs_operator = task != "kummer" && task != "sobolev";
  if (needs_operator) {
    if (!doc.contains("operator")) {
      throw ConfigError("config.operator: missing required key");
    }
    cfg.operator_spec = doc["operator"];
    build_operator(cfg.operator_spec);  // validate eagerly
  } else if (doc.contains("operator")) {
    cfg.operator_spec = doc["operator"];
    build_operator(cfg.operator_spec);
  }

  const bool needs_domain = task == "classify" || task == "solve" ||
                            task == "obstacle" || task == "verify";
  if (needs_domain) {
    if (!doc.contains("domain")) {
      throw ConfigError("config.domain: missing required key");
    }
    cfg.domain_spec = doc["domain"];
    build_domain(cfg.domain_spec, 0);  // validate eagerly
  }

  if (doc.contains(task)) cfg.task_spec = doc[task];
  return cfg;
}

OperatorSpec build_operator(const json& spec) {
  const std::string path = "config.operator";
  if (!spec.is_object() || !spec.contains("name") || !spec["name"].is_string()) {
    throw ConfigError(path + ".name: missing operator name");
  }
  const std::string name = spec["name"].get<std::string>();
  if (name == "heston") {
    require_keys(spec, path, {"name", "kappa", "theta", "sigma", "rho", "r", "q"},
                 {"kappa", "theta", "sigma"});
    HestonParams p;
    p.kappa = number_at(spec, path, "kappa");
    p.theta = number_at(spec, path, "theta");
    p.sigma = number_at(spec, path, "sigma");
    p.rho = number_at(spec, path, "rho", 0.0);
    p.r = number_at(spec, path, "r", 0.0);
    p.q = number_at(spec, path, "q", 0.0);
    try {
      return make_heston(p);
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (name == "kummer") {
    require_keys(spec, path, {"name", "alpha", "beta"}, {"alpha", "beta"});
    try {
      return make_kummer(number_at(spec, path, "alpha"),
                         number_at(spec, path, "beta"));
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (name == "dh") {
    require_keys(spec, path, {"name", "beta", "dim"}, {"beta"});
    const int dim = static_cast<int>(number_at(spec, path, "dim", 2));
    try {
      return make_dh_model(number_at(spec, path, "beta"), dim);
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (name == "affine") {
    require_keys(spec, path, {"name", "dim", "a1", "b0", "b1", "c0", "c1"},
                 {"dim", "a1", "b0"});
    const int d = static_cast<int>(number_at(spec, path, "dim"));
    if (d < 1 || d > 2) throw ConfigError(path + ".dim: expected 1 or 2");
    const Eigen::MatrixXd a1 = matrix_at(spec, path, "a1", d);
    const Eigen::VectorXd b0 = vector_at(spec, path, "b0", d);
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(d, d);
    if (spec.contains("b1")) b1 = matrix_at(spec, path, "b1", d);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(d);
    if (spec.contains("c1")) c1 = vector_at(spec, path, "c1", d);
    try {
      return make_affine(a1, b0, b1, number_at(spec, path, "c0", 0.0), c1);
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (name == "constant") {
    require_keys(spec, path, {"name", "dim", "a0", "b0", "c0"}, {"dim", "a0"});
    const int d = static_cast<int>(number_at(spec, path, "dim"));
    if (d < 1 || d > 2) throw ConfigError(path + ".dim: expected 1 or 2");
    const Eigen::MatrixXd a0 = matrix_at(spec, path, "a0", d);
    Eigen::VectorXd b0 = Eigen::VectorXd::Zero(d);
    if (spec.contains("b0")) b0 = vector_at(spec, path, "b0", d);
    return make_constant(a0, b0, number_at(spec, path, "c0", 0.0));
  }
  throw ConfigError(path + ".name: unknown operator '" + name + "'");
}

DomainGrid build_domain(const json& spec, int refine) {
  const std::string path = "config.domain";
  require_keys(spec, path, {"bounds", "nodes", "grading"}, {"bounds", "nodes"});
  if (!spec["bounds"].is_array() || !spec["nodes"].is_array() ||
      spec["bounds"].size() != spec["nodes"].size() || spec["bounds"].empty() ||
      spec["bounds"].size() > 2) {
    throw ConfigError(path + ": bounds and nodes must be 1- or 2-axis arrays");
  }
  const int dim = static_cast<int>(spec["bounds"].size());
  std::vector<GridAxis> axes;
  for (int k = 0; k < dim; ++k) {
    const auto& b = spec["bounds"][k];
    if (!b.is_array() || b.size() != 2) {
      throw ConfigError(path + ".bounds: each axis needs [lo, hi]");
    }
    const double lo = b[0].get<double>(), hi = b[1].get<double>();
    int n = spec["nodes"][k].get<int>();
    if (n < 3) throw ConfigError(path + ".nodes: need at least 3 nodes per axis");
    n = (n - 1) * (1 << refine) + 1;
    double power = 1.0;
    if (spec.contains("grading")) {
      power = spec["grading"][k].get<double>();
    }
    try {
      axes.push_back(power == 1.0 ? GridAxis::uniform(lo, hi, n)
                                  : GridAxis::graded(lo, hi, n, power));
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return DomainGrid::from_axes(std::move(axes));
}

ScalarField build_field(const json& value, const std::string& path) {
  if (value.is_null()) {
    return [](const Point&) { return 0.0; };
  }
  if (value.is_number()) {
    const double v = value.get<double>();
    return [v](const Point&) { return v; };
  }
  if (value.is_object() && value.contains("quadratic")) {
    const json& q = value["quadratic"];
    require_keys(q, path + ".quadratic", {"offset", "center", "scale"},
                 {"offset", "center"});
    const double offset = number_at(q, path + ".quadratic", "offset");
    const Eigen::VectorXd center = vector_at(q, path + ".quadratic", "center");
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(center.size());
    if (q.contains("scale")) {
      scale = vector_at(q, path + ".quadratic", "scale",
                        static_cast<int>(center.size()));
    }
    return [offset, center, scale](const Point& x) {
      double s = offset;
      for (int k = 0; k < center.size() && k < x.size(); ++k) {
        s -= scale[k] * (x[k] - center[k]) * (x[k] - center[k]);
      }
      return s;
    };
  }
  throw ConfigError(path + ": expected a number or a quadratic field spec");
}

uint64_t config_digest(const json& canonical) {
  return fnv1a(canonical.dump());
}

}  // namespace degell::cli
