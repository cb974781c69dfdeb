#include "degell/fdsolver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace degell {

const char* to_string(RowTag t) {
  switch (t) {
    case RowTag::interior: return "interior";
    case RowTag::degenerate_boundary: return "degenerate_boundary";
    case RowTag::dirichlet: return "dirichlet";
    case RowTag::neumann: return "neumann";
  }
  return "?";
}

namespace {

using Triplet = Eigen::Triplet<double>;

struct RowBuilder {
  std::map<int, double>* entries;
  void add(int col, double v) { (*entries)[col] += v; }
};

// derivative weights of the quadratic through (0, t1, t2) evaluated at 0
void one_sided_3pt(double t1, double t2, double& w0, double& w1, double& w2) {
  w0 = -(t1 + t2) / (t1 * t2);
  w1 = t2 / (t1 * (t2 - t1));
  w2 = -t1 / (t2 * (t2 - t1));
}

}  // namespace

DiscreteProblem assemble(const OperatorSpec& op, const DomainGrid& dom,
                         const ConditionPlan& plan, const ScalarField& f,
                         const ScalarField& g, const ScalarField& h,
                         const AssemblyOptions& opts) {
  if (op.dim != dom.dim) {
    throw ParameterError("assemble: operator and grid dimensions differ");
  }
  const int nx = dom.nx();
  const int ny = dom.ny();
  const int n = dom.num_nodes();
  const auto& X = dom.axes[0].x;
  const std::vector<double>* Y = dom.dim > 1 ? &dom.axes[1].x : nullptr;

  DiscreteProblem prob;
  prob.grid = dom;
  prob.rhs = Eigen::VectorXd::Zero(n);
  prob.row_tags.assign(n, RowTag::interior);

  std::vector<std::map<int, double>> rows(n);

  auto need = [](const ScalarField& fld, const char* what) -> const ScalarField& {
    if (!fld) throw ParameterError(std::string("assemble: missing field: ") + what);
    return fld;
  };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = dom.index(i, j);
      const Point p = dom.node(i, j);
      RowBuilder row{&rows[k]};

      if (dom.is_boundary(i, j)) {
        const auto& entry = plan.entry_at(dom, i, j);
        const auto& seg = entry.segment;
        const int ax = seg.axis;
        const int dir = seg.side == 0 ? 1 : -1;  // inward along the axis

        if (entry.tag == ConditionTag::dirichlet) {
          row.add(k, 1.0);
          prob.rhs[k] = need(g, "g")(p);
          prob.row_tags[k] = RowTag::dirichlet;
          continue;
        }

        if (entry.tag == ConditionTag::neumann) {
          // D_n u = h, assembled as (u0 - u1)/step = -h so that the row has
          // the M-matrix sign pattern
          const int ii = ax == 0 ? i + dir : i;
          const int jj = ax == 1 ? j + dir : j;
          const double step =
              std::abs((ax == 0 ? X[ii] - X[i] : (*Y)[jj] - (*Y)[j]));
          row.add(k, 1.0 / step);
          row.add(dom.index(ii, jj), -1.0 / step);
          prob.rhs[k] = h ? -h(p) : 0.0;
          prob.row_tags[k] = RowTag::neumann;
          continue;
        }

        // oblique degenerate row (tags oblique_degenerate and none both use
        // the first-order boundary operator -<b,Du> + c u = f)
        const Eigen::VectorXd bv = op.b(p);
        const double cv = op.c(p);
        const double b_inward = bv[ax] * dir;
        if (b_inward < 0) {
          prob.diag.bperp_negative_nodes++;
          if (prob.diag.bperp_negative_nodes == 1) {
            prob.diag.warnings.push_back(
                "b_perp < 0 on a degenerate-boundary node; the oblique row "
                "is not well-posed by the sign condition");
          }
        }
        // normal derivative, one-sided into the domain
        if (!opts.three_point_boundary) {
          const int ii = ax == 0 ? i + dir : i;
          const int jj = ax == 1 ? j + dir : j;
          const double step =
              std::abs((ax == 0 ? X[ii] - X[i] : (*Y)[jj] - (*Y)[j]));
          // -b_ax u_{x_ax} with u_{x_ax} = dir (u1 - u0)/step
          row.add(dom.index(ii, jj), -bv[ax] * dir / step);
          row.add(k, bv[ax] * dir / step);
        } else {
          const int i1 = ax == 0 ? i + dir : i, j1 = ax == 1 ? j + dir : j;
          const int i2 = ax == 0 ? i + 2 * dir : i, j2 = ax == 1 ? j + 2 * dir : j;
          const double t1 =
              std::abs(ax == 0 ? X[i1] - X[i] : (*Y)[j1] - (*Y)[j]);
          const double t2 =
              std::abs(ax == 0 ? X[i2] - X[i] : (*Y)[j2] - (*Y)[j]);
          double w0, w1, w2;
          one_sided_3pt(t1, t2, w0, w1, w2);
          row.add(k, -bv[ax] * dir * w0);
          row.add(dom.index(i1, j1), -bv[ax] * dir * w1);
          row.add(dom.index(i2, j2), -bv[ax] * dir * w2);
          if (prob.diag.warnings.empty() ||
              prob.diag.warnings.back().find("three-point") == std::string::npos) {
            prob.diag.warnings.push_back(
                "three-point one-sided boundary rows break the strict "
                "M-matrix sign pattern");
          }
        }
        // tangential upwind drift; at a face end the difference is flipped
        // into the grid
        if (dom.dim > 1) {
          const int tg = 1 - ax;
          const double bt = bv[tg];
          if (bt != 0.0) {
            const int tidx = tg == 0 ? i : j;
            const int tn = dom.axes[tg].n();
            int tdir = bt > 0 ? 1 : -1;
            if (tidx + tdir < 0 || tidx + tdir >= tn) tdir = -tdir;
            const int ii = tg == 0 ? i + tdir : i;
            const int jj = tg == 1 ? j + tdir : j;
            const double step =
                std::abs(tg == 0 ? X[ii] - X[i] : (*Y)[jj] - (*Y)[j]);
            // -bt u_t with u_t = tdir (u_nb - u0)/step
            row.add(dom.index(ii, jj), -bt * tdir / step);
            row.add(k, bt * tdir / step);
          }
        }
        row.add(k, cv);
        prob.rhs[k] = need(f, "f")(p);
        prob.row_tags[k] = RowTag::degenerate_boundary;
        continue;
      }

      // interior row
      const Eigen::MatrixXd A = op.a(p);
      const Eigen::VectorXd bv = op.b(p);
      const double cv = op.c(p);

      const double hxm = X[i] - X[i - 1];
      const double hxp = X[i + 1] - X[i];
      // -a11 u_xx
      {
        const double a11 = A(0, 0);
        row.add(dom.index(i - 1, j), -a11 * 2.0 / (hxm * (hxm + hxp)));
        row.add(dom.index(i + 1, j), -a11 * 2.0 / (hxp * (hxm + hxp)));
        row.add(k, a11 * 2.0 / (hxm * hxp));
      }
      double hym = 0, hyp = 0;
      if (dom.dim > 1) {
        hym = (*Y)[j] - (*Y)[j - 1];
        hyp = (*Y)[j + 1] - (*Y)[j];
        const double a22 = A(1, 1);
        row.add(dom.index(i, j - 1), -a22 * 2.0 / (hym * (hym + hyp)));
        row.add(dom.index(i, j + 1), -a22 * 2.0 / (hyp * (hym + hyp)));
        row.add(k, a22 * 2.0 / (hym * hyp));

        // -2 a12 u_xy, orientation chosen by the sign of a12
        const double a12 = A(0, 1);
        if (a12 > 0) {
          const double wp = a12 / (hxp * hyp);
          row.add(dom.index(i + 1, j + 1), -wp);
          row.add(dom.index(i + 1, j), wp);
          row.add(dom.index(i, j + 1), wp);
          row.add(k, -wp);
          const double wm = a12 / (hxm * hym);
          row.add(dom.index(i - 1, j - 1), -wm);
          row.add(dom.index(i - 1, j), wm);
          row.add(dom.index(i, j - 1), wm);
          row.add(k, -wm);
        } else if (a12 < 0) {
          const double wp = a12 / (hxp * hym);
          row.add(dom.index(i + 1, j - 1), wp);
          row.add(dom.index(i + 1, j), -wp);
          row.add(dom.index(i, j - 1), -wp);
          row.add(k, wp);
          const double wm = a12 / (hxm * hyp);
          row.add(dom.index(i - 1, j + 1), wm);
          row.add(dom.index(i - 1, j), -wm);
          row.add(dom.index(i, j + 1), -wm);
          row.add(k, wm);
        }
      }
      // drift
      for (int axd = 0; axd < dom.dim; ++axd) {
        const double bd = bv[axd];
        if (bd == 0.0) continue;
        const double hm = axd == 0 ? hxm : hym;
        const double hp = axd == 0 ? hxp : hyp;
        const int im = axd == 0 ? i - 1 : i, jm = axd == 1 ? j - 1 : j;
        const int ip = axd == 0 ? i + 1 : i, jp = axd == 1 ? j + 1 : j;
        if (!opts.upwind_drift) {
          row.add(dom.index(im, jm), bd / (hm + hp));
          row.add(dom.index(ip, jp), -bd / (hm + hp));
        } else if (bd > 0) {
          row.add(dom.index(ip, jp), -bd / hp);
          row.add(k, bd / hp);
        } else {
          row.add(dom.index(im, jm), bd / hm);
          row.add(k, -bd / hm);
        }
      }
      row.add(k, cv);
      prob.rhs[k] = need(f, "f")(p);
    }
  }

  // monotonicity diagnostic: diagonal > 0, off-diagonal <= 0 on every
  // non-Dirichlet row
  for (int k = 0; k < n; ++k) {
    if (prob.row_tags[k] == RowTag::dirichlet) continue;
    double rowscale = 0;
    for (const auto& [col, v] : rows[k]) rowscale = std::max(rowscale, std::abs(v));
    bool bad = false;
    const auto it = rows[k].find(k);
    if (it == rows[k].end() || it->second <= 0) bad = true;
    for (const auto& [col, v] : rows[k]) {
      if (col != k && v > 1e-14 * rowscale) bad = true;
    }
    if (bad) {
      prob.diag.monotone = false;
      prob.diag.nonmonotone_rows++;
    }
  }
  if (!prob.diag.monotone) {
    prob.diag.warnings.push_back(
        std::to_string(prob.diag.nonmonotone_rows) +
        " rows violate the M-matrix sign pattern");
  }

  std::vector<Triplet> trips;
  for (int k = 0; k < n; ++k) {
    for (const auto& [col, v] : rows[k]) {
      if (v != 0.0) trips.emplace_back(k, col, v);
    }
  }
  prob.matrix.resize(n, n);
  prob.matrix.setFromTriplets(trips.begin(), trips.end());
  prob.matrix.makeCompressed();
  return prob;
}

uint64_t DiscreteProblem::digest() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(matrix, k);
         it; ++it) {
      int32_t rc[2] = {static_cast<int32_t>(it.row()), static_cast<int32_t>(it.col())};
      double v = it.value();
      h = fnv1a(rc, sizeof rc, h);
      h = fnv1a(&v, sizeof v, h);
    }
  }
  h = fnv1a(rhs.data(), sizeof(double) * rhs.size(), h);
  return h;
}

void DiscreteProblem::write_coo(std::ostream& os) const {
  char buf[64];
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(matrix, k);
         it; ++it) {
      snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()),
               static_cast<int>(it.col()), it.value());
      os << buf;
    }
  }
}

DiscreteSolution solve(const DiscreteProblem& prob, double tol, SolveMethod method) {
  if (prob.matrix.rows() != prob.matrix.cols() ||
      prob.matrix.rows() != prob.rhs.size()) {
    throw ParameterError("solve: matrix and rhs sizes do not match");
  }
  DiscreteSolution sol;
  sol.problem_hash = prob.digest();

  if (method == SolveMethod::direct) {
    Eigen::SparseMatrix<double> A = prob.matrix;  // SparseLU wants col-major
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
      throw SolverError("solve: sparse LU factorization failed (singular matrix?)",
                        {});
    }
    sol.values = lu.solve(prob.rhs);
    // one step of iterative refinement pushes the residual to its
    // double-precision floor
    Eigen::VectorXd r = prob.rhs - prob.matrix * sol.values;
    sol.values += lu.solve(r);
    sol.iterations = 2;
  } else {
    Eigen::SparseMatrix<double> A = prob.matrix;
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
    it.setTolerance(tol);
    it.setMaxIterations(20000);
    it.compute(A);
    sol.values = it.solve(prob.rhs);
    sol.iterations = static_cast<int>(it.iterations());
    if (it.info() != Eigen::Success) {
      throw SolverError("solve: iterative solver did not converge",
                        {it.error()});
    }
  }

  sol.residual_inf = (prob.matrix * sol.values - prob.rhs).cwiseAbs().maxCoeff();
  // achievable floor: rounding of M u alone costs eps ||M||_inf ||u||_inf
  double m_inf = 0;
  for (int k = 0; k < prob.matrix.outerSize(); ++k) {
    double s = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator itr(prob.matrix, k);
         itr; ++itr) {
      s += std::abs(itr.value());
    }
    m_inf = std::max(m_inf, s);
  }
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * m_inf *
                       (sol.values.cwiseAbs().maxCoeff() + 1.0);
  sol.tolerance = tol * (prob.rhs.cwiseAbs().maxCoeff() + 1.0) + floor;
  if (!(sol.residual_inf <= sol.tolerance)) {
    throw SolverError("solve: residual above tolerance",
                      {sol.residual_inf, sol.tolerance});
  }
  return sol;
}

RefineStudy refine_study(const OperatorSpec& op, const DomainGrid& base,
                         const ConditionPlan& plan, const ScalarField& f,
                         const ScalarField& g, int levels,
                         const ScalarField& oracle) {
  if (levels < 2) throw ParameterError("refine_study: need at least 2 levels");
  std::vector<DomainGrid> grids;
  std::vector<Eigen::VectorXd> sols;
  RefineStudy out;
  for (int l = 0; l < levels; ++l) {
    std::vector<GridAxis> axes;
    for (const auto& a : base.axes) {
      const int n = (a.n() - 1) * (1 << l) + 1;
      axes.push_back(GridAxis::uniform(a.lo, a.hi, n));
    }
    DomainGrid dom = DomainGrid::from_axes(std::move(axes));
    dom.segments = base.segments;
    const auto prob = assemble(op, dom, plan, f, g);
    sols.push_back(solve(prob).values);
    grids.push_back(std::move(dom));
    double h = 0;
    for (const auto& a : grids.back().axes) {
      for (int k = 1; k < a.n(); ++k) h = std::max(h, a.x[k] - a.x[k - 1]);
    }
    out.h.push_back(h);
  }
  for (int l = 0; l < levels; ++l) {
    double err = 0;
    const auto& dom = grids[l];
    if (oracle) {
      for (int k = 0; k < dom.num_nodes(); ++k) {
        err = std::max(err, std::abs(sols[l][k] - oracle(dom.node_at(k))));
      }
    } else {
      if (l == levels - 1) {
        out.sup_error.push_back(0.0);
        continue;
      }
      const auto& fine = grids.back();
      const int stride = (fine.nx() - 1) / (dom.nx() - 1);
      for (int j = 0; j < dom.ny(); ++j) {
        for (int i = 0; i < dom.nx(); ++i) {
          const int kf = fine.index(i * stride, dom.dim > 1 ? j * stride : 0);
          err = std::max(err,
                         std::abs(sols[l][dom.index(i, j)] - sols.back()[kf]));
        }
      }
    }
    out.sup_error.push_back(err);
  }
  const size_t m = oracle ? out.sup_error.size() : out.sup_error.size() - 1;
  for (size_t l = 0; l + 1 < m; ++l) {
    out.observed_order.push_back(
        std::log2(out.sup_error[l] / out.sup_error[l + 1]));
  }
  return out;
}

double quadratic_growth_constant(const OperatorSpec& op, const DomainGrid& dom) {
  double kmin = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < dom.num_nodes(); ++k) {
    const Point p = dom.node_at(k);
    const double v = (op.a(p).trace() + op.b(p).dot(p)) / (1.0 + p.squaredNorm());
    kmin = std::max(kmin, v);
  }
  return kmin;
}

void write_solution_csv(std::ostream& os, const DomainGrid& grid,
                        const Eigen::VectorXd& values,
                        const std::vector<RowTag>& tags) {
  char buf[64];
  auto fmt = [&buf](double v) {
    snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  if (grid.dim == 1) {
    os << "x,value,row_tag\n";
    for (int k = 0; k < grid.num_nodes(); ++k) {
      os << fmt(grid.axes[0].x[k]) << ',' << fmt(values[k]) << ','
         << to_string(tags[k]) << '\n';
    }
  } else {
    os << "x,y,value,row_tag\n";
    for (int k = 0; k < grid.num_nodes(); ++k) {
      int i, j;
      grid.unpack(k, i, j);
      os << fmt(grid.axes[0].x[i]) << ',' << fmt(grid.axes[1].x[j]) << ','
         << fmt(values[k]) << ',' << to_string(tags[k]) << '\n';
    }
  }
}

}  // namespace degell
