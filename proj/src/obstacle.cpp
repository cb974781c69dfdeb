#include "degell/obstacle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <cmath>
#include <ostream>

namespace degell {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Eigen::VectorXd evaluate_on_grid(const DomainGrid& grid, const ScalarField& f) {
  Eigen::VectorXd v(grid.num_nodes());
  for (int k = 0; k < grid.num_nodes(); ++k) v[k] = f(grid.node_at(k));
  return v;
}

// max |min((Mu - rhs)/diag, u - psi)| over non-Dirichlet rows; Dirichlet
// rows contribute their (diagonal-normalized) equation residual.
double complementarity_residual(const DiscreteProblem& prob,
                                const Eigen::VectorXd& u,
                                const Eigen::VectorXd& psi) {
  double worst = 0.0;
  for (int k = 0; k < prob.matrix.outerSize(); ++k) {
    double row = 0.0, diag = 1.0;
    for (SpMat::InnerIterator it(prob.matrix, k); it; ++it) {
      row += it.value() * u[it.col()];
      if (it.col() == k) diag = it.value();
    }
    const double eq = (row - prob.rhs[k]) / diag;
    if (prob.row_tags[k] == RowTag::dirichlet) {
      worst = std::max(worst, std::abs(eq));
    } else {
      worst = std::max(worst, std::abs(std::min(eq, u[k] - psi[k])));
    }
  }
  return worst;
}

}  // namespace

ObstacleSolution solve_obstacle(const DiscreteProblem& prob, ObstacleSpec& spec,
                                const PsorOptions& opts) {
  if (!(opts.omega > 0.0 && opts.omega < 2.0)) {
    throw ParameterError("solve_obstacle: omega must lie in (0,2)");
  }
  if (!prob.diag.monotone) {
    throw InputError(
        "solve_obstacle: assembly is not monotone; PSOR convergence is only "
        "guaranteed for the M-matrix sign pattern");
  }
  if (!spec.psi) throw ParameterError("solve_obstacle: missing obstacle field");

  const int n = prob.grid.num_nodes();
  const Eigen::VectorXd psi = evaluate_on_grid(prob.grid, spec.psi);
  if (!psi.allFinite()) {
    throw InputError("solve_obstacle: obstacle not finite on the grid");
  }

  // compatibility psi <= g at Dirichlet rows (rhs holds g there)
  double scale = std::max(prob.rhs.cwiseAbs().maxCoeff(), psi.cwiseAbs().maxCoeff());
  scale = std::max(scale, 1.0);
  for (int k = 0; k < n; ++k) {
    if (prob.row_tags[k] == RowTag::dirichlet && psi[k] > prob.rhs[k] + 1e-12 * scale) {
      throw InputError("solve_obstacle: compatibility psi <= g violated at node " +
                       std::to_string(k));
    }
  }
  spec.compat_checked = true;

  // start from the pinned boundary data and the obstacle
  Eigen::VectorXd u(n);
  for (int k = 0; k < n; ++k) {
    u[k] = prob.row_tags[k] == RowTag::dirichlet ? prob.rhs[k]
                                                 : std::max(0.0, psi[k]);
  }

  ObstacleSolution sol;
  const double comp_target = 10.0 * opts.tol;
  int iter = 0;
  double update = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  while (iter < opts.max_iters) {
    ++iter;
    update = 0.0;
    for (int k = 0; k < n; ++k) {
      if (prob.row_tags[k] == RowTag::dirichlet) continue;
      double diag = 0.0, off = 0.0;
      for (SpMat::InnerIterator it(prob.matrix, k); it; ++it) {
        if (it.col() == k) {
          diag = it.value();
        } else {
          off += it.value() * u[it.col()];
        }
      }
      const double gs = (prob.rhs[k] - off) / diag;
      double next = u[k] + opts.omega * (gs - u[k]);
      next = std::max(next, psi[k]);
      update = std::max(update, std::abs(next - u[k]));
      u[k] = next;
    }
    if (update < opts.tol) {
      sol.complementarity_residual = complementarity_residual(prob, u, psi);
      history.push_back(sol.complementarity_residual);
      if (sol.complementarity_residual <= comp_target) break;
    }
  }
  if (iter >= opts.max_iters) {
    throw SolverError("solve_obstacle: PSOR exceeded max_iters", history);
  }

  // terminal polish: pin the identified active set and solve that linear
  // system exactly; accepted only when the polished iterate stays feasible
  // and complementary (finishing the PSOR iterate, not a second method)
  {
    std::vector<char> active(n, 0);
    for (int k = 0; k < n; ++k) {
      if (prob.row_tags[k] != RowTag::dirichlet && u[k] - psi[k] < 10.0 * opts.tol) {
        active[k] = 1;
      }
    }
    Eigen::SparseMatrix<double> A(n, n);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = prob.rhs;
    for (int k = 0; k < prob.matrix.outerSize(); ++k) {
      if (active[k]) {
        trips.emplace_back(k, k, 1.0);
        rhs[k] = psi[k];
        continue;
      }
      for (SpMat::InnerIterator it(prob.matrix, k); it; ++it) {
        trips.emplace_back(k, it.col(), it.value());
      }
    }
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() == Eigen::Success) {
      const Eigen::VectorXd polished = lu.solve(rhs);
      bool feasible = true;
      const double slack = 1e-12 * scale;
      for (int k = 0; k < n && feasible; ++k) {
        if (prob.row_tags[k] == RowTag::dirichlet) continue;
        if (polished[k] < psi[k] - slack) feasible = false;
      }
      if (feasible) {
        const double res = complementarity_residual(prob, polished, psi);
        if (res <= sol.complementarity_residual) {
          u = polished;
          sol.complementarity_residual = res;
        }
      }
    }
  }

  sol.values = u;
  sol.iterations = iter;
  sol.active_set.assign(n, 0);
  for (int k = 0; k < n; ++k) {
    if (prob.row_tags[k] != RowTag::dirichlet && u[k] - psi[k] < 10.0 * opts.tol) {
      sol.active_set[k] = 1;
    }
  }
  return sol;
}

ComparisonReport obstacle_comparison(const DiscreteProblem& prob,
                                     const ObstacleSolution& sol1,
                                     const ObstacleSolution& sol2,
                                     const ObstacleSpec& spec1,
                                     const ObstacleSpec& spec2) {
  const auto& grid = prob.grid;
  const int n = grid.num_nodes();
  double scale = 1.0;
  // ordering preconditions f1 >= f2, psi1 >= psi2 on the grid, g1 >= g2 at
  // Dirichlet nodes
  for (int k = 0; k < n; ++k) {
    const Point p = grid.node_at(k);
    const bool dirichlet = prob.row_tags[k] == RowTag::dirichlet;
    const double f1 = spec1.f ? spec1.f(p) : 0.0, f2 = spec2.f ? spec2.f(p) : 0.0;
    const double s1 = spec1.psi(p), s2 = spec2.psi(p);
    scale = std::max({scale, std::abs(f1), std::abs(s1)});
    if (!dirichlet && f1 < f2 - 1e-12 * scale) {
      throw InputError("obstacle_comparison: f1 >= f2 fails first at node " +
                       std::to_string(k));
    }
    if (s1 < s2 - 1e-12 * scale) {
      throw InputError("obstacle_comparison: psi1 >= psi2 fails first at node " +
                       std::to_string(k));
    }
    if (dirichlet) {
      const double g1 = spec1.g(p), g2 = spec2.g(p);
      if (g1 < g2 - 1e-12 * scale) {
        throw InputError("obstacle_comparison: g1 >= g2 fails first at node " +
                         std::to_string(k));
      }
    }
  }

  ComparisonReport rep;
  for (int k = 0; k < n; ++k) {
    const double viol = sol2.values[k] - sol1.values[k];
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_node = k;
    }
  }
  rep.ok = rep.max_violation <= 1e-8 * scale;
  return rep;
}

StabilityReport obstacle_stability(const DiscreteProblem& prob,
                                   const ObstacleSolution& sol1,
                                   const ObstacleSolution& sol2,
                                   const ObstacleSpec& spec1,
                                   const ObstacleSpec& spec2, double c0) {
  if (!(c0 > 0)) throw ParameterError("obstacle_stability: c0 must be positive");
  const auto& grid = prob.grid;
  double df = 0, dg = 0, dpsi = 0;
  for (int k = 0; k < grid.num_nodes(); ++k) {
    const Point p = grid.node_at(k);
    if (prob.row_tags[k] == RowTag::dirichlet) {
      dg = std::max(dg, std::abs(spec1.g(p) - spec2.g(p)));
    } else {
      const double f1 = spec1.f ? spec1.f(p) : 0.0, f2 = spec2.f ? spec2.f(p) : 0.0;
      df = std::max(df, std::abs(f1 - f2));
    }
    dpsi = std::max(dpsi, std::abs(spec1.psi(p) - spec2.psi(p)));
  }
  StabilityReport rep;
  rep.lhs = (sol1.values - sol2.values).cwiseAbs().maxCoeff();
  rep.rhs = std::max({df / c0, dg, dpsi});
  const double scale = std::max(
      {1.0, sol1.values.cwiseAbs().maxCoeff(), sol2.values.cwiseAbs().maxCoeff()});
  rep.ok = rep.lhs <= rep.rhs + 1e-8 * scale;
  return rep;
}

Eigen::VectorXd reference_obstacle_solve(const DiscreteProblem& prob,
                                         const Eigen::VectorXd& psi,
                                         EnumerationMode mode) {
  const int n = prob.grid.num_nodes();
  std::vector<int> free_nodes;
  for (int k = 0; k < n; ++k) {
    if (prob.row_tags[k] != RowTag::dirichlet) free_nodes.push_back(k);
  }
  const int m = static_cast<int>(free_nodes.size());
  if (mode == EnumerationMode::generic && m > 16) {
    throw ParameterError("reference_obstacle_solve: generic enumeration capped at 16 free nodes");
  }
  if (mode == EnumerationMode::intervals && m > 25) {
    throw ParameterError("reference_obstacle_solve: interval enumeration capped at 25 free nodes");
  }

  const Eigen::MatrixXd M = Eigen::MatrixXd(prob.matrix);
  const double scale = std::max({1.0, prob.rhs.cwiseAbs().maxCoeff(),
                                 psi.cwiseAbs().maxCoeff()});
  const double tol = 1e-9 * scale;

  auto try_active_set = [&](const std::vector<bool>& active,
                            Eigen::VectorXd& out) -> bool {
    // rows: active -> u = psi; inactive/dirichlet -> original equation
    Eigen::MatrixXd S = M;
    Eigen::VectorXd rhs = prob.rhs;
    for (int idx = 0; idx < m; ++idx) {
      if (!active[idx]) continue;
      const int k = free_nodes[idx];
      S.row(k).setZero();
      S(k, k) = 1.0;
      rhs[k] = psi[k];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd u = lu.solve(rhs);
    const Eigen::VectorXd res = M * u - prob.rhs;
    for (int idx = 0; idx < m; ++idx) {
      const int k = free_nodes[idx];
      if (active[idx]) {
        if (res[k] < -tol) return false;  // needs Au - f >= 0 where u = psi
      } else {
        if (u[k] < psi[k] - tol) return false;  // feasibility u >= psi
      }
    }
    out = u;
    return true;
  };

  Eigen::VectorXd best;
  std::vector<bool> active(m, false);
  if (mode == EnumerationMode::generic) {
    for (uint64_t mask = 0; mask < (1ull << m); ++mask) {
      for (int idx = 0; idx < m; ++idx) active[idx] = (mask >> idx) & 1;
      if (try_active_set(active, best)) return best;
    }
  } else {
    // contiguous runs over the free nodes, including the empty set
    for (int lo = 0; lo <= m; ++lo) {
      for (int hi = lo; hi <= m; ++hi) {
        std::fill(active.begin(), active.end(), false);
        for (int idx = lo; idx < hi; ++idx) active[idx] = true;
        if (try_active_set(active, best)) return best;
        if (lo == m) break;
      }
    }
  }
  throw SolverError("reference_obstacle_solve: no feasible active set found", {});
}

void write_active_set_csv(std::ostream& os, const DomainGrid& grid,
                          const ObstacleSolution& sol) {
  char buf[64];
  auto fmt = [&buf](double v) {
    snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  if (grid.dim == 1) {
    os << "x,value,active\n";
    for (int k = 0; k < grid.num_nodes(); ++k) {
      os << fmt(grid.axes[0].x[k]) << ',' << fmt(sol.values[k]) << ','
         << static_cast<int>(sol.active_set[k]) << '\n';
    }
  } else {
    os << "x,y,value,active\n";
    for (int k = 0; k < grid.num_nodes(); ++k) {
      int i, j;
      grid.unpack(k, i, j);
      os << fmt(grid.axes[0].x[i]) << ',' << fmt(grid.axes[1].x[j]) << ','
         << fmt(sol.values[k]) << ',' << static_cast<int>(sol.active_set[k]) << '\n';
    }
  }
}

std::vector<Point> extract_free_boundary_2d(const DomainGrid& grid,
                                            const ObstacleSolution& sol,
                                            const Eigen::VectorXd& psi,
                                            double threshold) {
  if (grid.dim != 2) {
    throw ParameterError("extract_free_boundary_2d: needs a 2-d grid");
  }
  std::vector<Point> pts;
  auto slack = [&](int k) { return sol.values[k] - psi[k] - threshold; };
  // sign crossings of (u - psi - threshold) along both grid directions
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i + 1 < grid.nx(); ++i) {
      const double s0 = slack(grid.index(i, j));
      const double s1 = slack(grid.index(i + 1, j));
      if ((s0 <= 0) != (s1 <= 0)) {
        const double t = s0 / (s0 - s1);
        Point p(2);
        p[0] = grid.axes[0].x[i] + t * (grid.axes[0].x[i + 1] - grid.axes[0].x[i]);
        p[1] = grid.axes[1].x[j];
        pts.push_back(p);
      }
    }
  }
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j + 1 < grid.ny(); ++j) {
      const double s0 = slack(grid.index(i, j));
      const double s1 = slack(grid.index(i, j + 1));
      if ((s0 <= 0) != (s1 <= 0)) {
        const double t = s0 / (s0 - s1);
        Point p(2);
        p[0] = grid.axes[0].x[i];
        p[1] = grid.axes[1].x[j] + t * (grid.axes[1].x[j + 1] - grid.axes[1].x[j]);
        pts.push_back(p);
      }
    }
  }
  return pts;
}

}  // namespace degell
