#ifndef DEGELL_OBSTACLE_HPP
#define DEGELL_OBSTACLE_HPP

#include "degell/fdsolver.hpp"

namespace degell {

/// Data of the discrete obstacle problem min{Au - f, u - psi} = 0 with the
/// boundary plan of the underlying DiscreteProblem.  f and g are the fields
/// already baked into the problem's rhs; psi is evaluated on the grid and
/// must satisfy psi <= g at Dirichlet nodes.
struct ObstacleSpec {
  ScalarField psi;
  ScalarField f;
  ScalarField g;
  bool compat_checked = false;
};

struct PsorOptions {
  double omega = 1.5;
  double tol = 1e-10;       // sup-norm of the iterate update
  int max_iters = 200000;
};

struct ObstacleSolution {
  Eigen::VectorXd values;
  std::vector<char> active_set;          // u - psi < 10 tol at the node
  double complementarity_residual = 0.0; // max |min(Mu - rhs, u - psi)|, rows
                                         // normalized by their diagonal
  int iterations = 0;
};

/// Projected SOR in lexicographic node order.  Requires the monotone
/// (M-matrix) diagnostic; Dirichlet nodes stay pinned to g and are never
/// projected.  Iterates until both the update is below tol and the
/// diagonally-normalized complementarity residual is below 10 tol.
ObstacleSolution solve_obstacle(const DiscreteProblem& prob, ObstacleSpec& spec,
                                const PsorOptions& opts = {});

struct ComparisonReport {
  double max_violation = 0.0;  // max(u2 - u1) over nodes
  int worst_node = -1;
  bool ok = false;
};

/// Checks the ordering preconditions f1 >= f2, psi1 >= psi2, g1 >= g2 and
/// asserts u1 >= u2 - 1e-8 * scale.
ComparisonReport obstacle_comparison(const DiscreteProblem& prob,
                                     const ObstacleSolution& sol1,
                                     const ObstacleSolution& sol2,
                                     const ObstacleSpec& spec1,
                                     const ObstacleSpec& spec2);

struct StabilityReport {
  double lhs = 0.0;  // ||u1 - u2||_inf
  double rhs = 0.0;  // (1/c0)||f1-f2|| v ||g1-g2|| v ||psi1-psi2||
  bool ok = false;
};

StabilityReport obstacle_stability(const DiscreteProblem& prob,
                                   const ObstacleSolution& sol1,
                                   const ObstacleSolution& sol2,
                                   const ObstacleSpec& spec1,
                                   const ObstacleSpec& spec2, double c0);

enum class EnumerationMode { generic, intervals };

/// Reference LCP solution by enumerating candidate active sets: every subset
/// of the free nodes in `generic` mode (capped at 16 free nodes), contiguous
/// runs only in `intervals` mode (capped at 25).  Solves each candidate's
/// linear system and returns the one satisfying feasibility and
/// complementarity.  Independent of the PSOR path.
Eigen::VectorXd reference_obstacle_solve(const DiscreteProblem& prob,
                                         const Eigen::VectorXd& psi,
                                         EnumerationMode mode);

void write_active_set_csv(std::ostream& os, const DomainGrid& grid,
                          const ObstacleSolution& sol);

/// Free-boundary polyline in two dimensions: crossing points of u - psi
/// against the active-set threshold along grid lines.
std::vector<Point> extract_free_boundary_2d(const DomainGrid& grid,
                                            const ObstacleSolution& sol,
                                            const Eigen::VectorXd& psi,
                                            double threshold);

}  // namespace degell

#endif
