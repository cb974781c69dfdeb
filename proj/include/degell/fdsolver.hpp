#ifndef DEGELL_FDSOLVER_HPP
#define DEGELL_FDSOLVER_HPP

#include <Eigen/Sparse>
#include <iosfwd>

#include "degell/boundary.hpp"

namespace degell {

enum class RowTag { interior, degenerate_boundary, dirichlet, neumann };
const char* to_string(RowTag t);

struct AssemblyOptions {
  bool upwind_drift = true;          // central drift breaks the M-pattern
  bool three_point_boundary = false; // 3-pt one-sided normal difference
};

struct AssemblyDiagnostics {
  bool monotone = true;  // M-matrix sign pattern on every non-Dirichlet row
  int nonmonotone_rows = 0;
  int bperp_negative_nodes = 0;
  std::vector<std::string> warnings;
};

/// Sparse discretization of the boundary value problem.  Interior rows use
/// central second differences, the sign-adapted seven-point cross stencil and
/// upwinded drift; rows tagged degenerate_boundary encode the first-order
/// oblique condition -<b,Du> + c u = f with one-sided differences into the
/// domain (the discrete enforcement of tr(a D^2 u) = 0 there); Neumann rows
/// are one-sided normal differences, sign-normalized to the M-pattern
/// (rhs carries -h); Dirichlet rows are identity rows with rhs g.
struct DiscreteProblem {
  DomainGrid grid;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  Eigen::VectorXd rhs;
  std::vector<RowTag> row_tags;
  AssemblyDiagnostics diag;

  bool monotone() const { return diag.monotone; }
  uint64_t digest() const;
  void write_coo(std::ostream& os) const;
};

DiscreteProblem assemble(const OperatorSpec& op, const DomainGrid& dom,
                         const ConditionPlan& plan, const ScalarField& f,
                         const ScalarField& g, const ScalarField& h = {},
                         const AssemblyOptions& opts = {});

enum class SolveMethod { direct, iterative };

struct DiscreteSolution {
  Eigen::VectorXd values;
  double residual_inf = 0.0;
  double tolerance = 0.0;  // enforced bound: tol (||rhs|| + 1) + rounding floor
  int iterations = 0;
  uint64_t problem_hash = 0;
};

/// Direct sparse LU by default (with one iterative-refinement step);
/// preconditioned BiCGSTAB as the iterative fallback.  Throws SolverError
/// when ||Mu - rhs||_inf exceeds tol (||rhs||_inf + 1) plus the
/// double-precision floor eps ||M||_inf ||u||_inf.
DiscreteSolution solve(const DiscreteProblem& prob, double tol = 1e-12,
                       SolveMethod method = SolveMethod::direct);

struct RefineStudy {
  std::vector<double> h;
  std::vector<double> sup_error;
  std::vector<double> observed_order;  // log2(err_k / err_{k+1})
};

/// Solves on grids with node counts (n0-1)*2^l + 1 per axis.  Errors are
/// measured against `oracle` when given, otherwise against the finest level
/// restricted to coarse nodes.
RefineStudy refine_study(const OperatorSpec& op, const DomainGrid& base,
                         const ConditionPlan& plan, const ScalarField& f,
                         const ScalarField& g, int levels,
                         const ScalarField& oracle = {});

/// sup over grid nodes of (tr a + <b,x>) / (1 + |x|^2), the smallest constant
/// realizing the quadratic-growth condition on this grid.
double quadratic_growth_constant(const OperatorSpec& op, const DomainGrid& dom);

/// CSV: coordinates, value, row tag.
void write_solution_csv(std::ostream& os, const DomainGrid& grid,
                        const Eigen::VectorXd& values,
                        const std::vector<RowTag>& tags);

}  // namespace degell

#endif
