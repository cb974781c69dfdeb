#include "degell/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace degell {

namespace {
double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }
}  // namespace

Box grid_box(const DomainGrid& dom) {
  Box box;
  for (const auto& a : dom.axes) box.push_back({a.lo, a.hi});
  return box;
}

ScalarField random_signed_field(Rng& rng, const Box& box, int sign) {
  TestFunction f = random_fourier_field(rng, box, 5);
  // normalize to unit amplitude over a coarse sample
  double amax = 0.0;
  const int d = static_cast<int>(box.size());
  Point p(d);
  const int probes = d == 1 ? 64 : 12;
  for (int i = 0; i < probes; ++i) {
    p[0] = box[0][0] + (box[0][1] - box[0][0]) * (i + 0.5) / probes;
    if (d == 1) {
      amax = std::max(amax, std::abs(f.val(p)));
    } else {
      for (int j = 0; j < probes; ++j) {
        p[1] = box[1][0] + (box[1][1] - box[1][0]) * (j + 0.5) / probes;
        amax = std::max(amax, std::abs(f.val(p)));
      }
    }
  }
  if (amax < 1e-12) amax = 1.0;
  const double target = static_cast<double>(sign);
  return [f, amax, target](const Point& x) {
    const double v = f.val(x) / amax;
    return target < 0 ? std::min(v, 0.0) : std::max(v, 0.0);
  };
}

namespace {

bool zero_c_on_grid(const OperatorSpec& op, const DomainGrid& dom) {
  for (int k = 0; k < dom.num_nodes(); ++k) {
    if (op.c(dom.node_at(k)) != 0.0) return false;
  }
  return true;
}

DomainGrid refine_grid(const DomainGrid& dom) {
  std::vector<GridAxis> axes;
  for (const auto& a : dom.axes) {
    axes.push_back(GridAxis::uniform(a.lo, a.hi, 2 * (a.n() - 1) + 1));
  }
  DomainGrid out = DomainGrid::from_axes(std::move(axes));
  out.segments = dom.segments;
  return out;
}

}  // namespace

PropertyReport check_weak_mp(const OperatorSpec& op, const DomainGrid& dom,
                             const ConditionPlan& plan, int trials,
                             uint64_t seed) {
  PropertyReport rep;
  rep.property_id = "weak_maximum_principle";
  rep.tolerance = 1e-10;

  const Box box = grid_box(dom);
  const bool c_zero = zero_c_on_grid(op, dom);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.fork(t);
    const ScalarField f = random_signed_field(trial, box, -1);
    const ScalarField g = random_signed_field(trial, box, -1);
    DiscreteProblem prob = assemble(op, dom, plan, f, g);
    if (!prob.diag.monotone) {
      rep.skipped = true;
      rep.skip_reason = "assembly is not monotone; discrete maximum principle "
                        "is only asserted for the M-matrix pattern";
      return rep;
    }
    const DiscreteSolution sol = solve(prob);
    double scale = 1.0;
    for (int k = 0; k < dom.num_nodes(); ++k) {
      if (prob.row_tags[k] != RowTag::dirichlet) {
        scale = std::max(scale, std::abs(prob.rhs[k]));
      } else {
        scale = std::max(scale, std::abs(prob.rhs[k]));
      }
    }
    rep.trials++;

    int worst_node = -1;
    double worst = 0.0;
    for (int k = 0; k < dom.num_nodes(); ++k) {
      if (sol.values[k] > worst) {
        worst = sol.values[k];
        worst_node = k;
      }
    }
    if (worst > 1e-10 * scale) {
      rep.failures++;
      if (worst > rep.worst.violation) {
        rep.worst = {"max u above zero for f <= 0, g <= 0", worst_node, worst,
                     static_cast<uint64_t>(t)};
      }
      continue;
    }

    if (c_zero) {
      // equality form sup u = sup over Dirichlet nodes of g when c == 0
      double gmax = -std::numeric_limits<double>::infinity();
      bool has_dirichlet = false;
      for (int k = 0; k < dom.num_nodes(); ++k) {
        if (prob.row_tags[k] == RowTag::dirichlet) {
          has_dirichlet = true;
          gmax = std::max(gmax, prob.rhs[k]);
        }
      }
      if (has_dirichlet) {
        const double umax = sol.values.maxCoeff();
        const double gap = std::abs(umax - gmax);
        if (gap > 1e-8 * scale) {
          rep.failures++;
          if (gap > rep.worst.violation) {
            rep.worst = {"c = 0 equality form sup u = sup g violated", -1, gap,
                         static_cast<uint64_t>(t)};
          }
        }
      }
    }
  }
  return rep;
}

PropertyReport check_hopf(const OperatorSpec& op, const DomainGrid& dom,
                          const ConditionPlan& plan, const HopfScenario& sc) {
  PropertyReport rep;
  rep.property_id = "hopf_boundary_point";

  auto run = [&](const DomainGrid& grid, double& quotient, double& maxexcess) {
    const DiscreteProblem prob = assemble(op, grid, plan, sc.f, sc.g);
    const DiscreteSolution sol = solve(prob);
    const auto& seg = grid.segment_by_label(sc.segment_label);
    // locate x0: face node nearest the requested tangential coordinate
    int k0 = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int k : grid.segment_nodes(seg, false)) {
      int i, j;
      grid.unpack(k, i, j);
      const double t = grid.face_coord(seg, i, j);
      if (std::abs(t - sc.t) < best) {
        best = std::abs(t - sc.t);
        k0 = k;
      }
    }
    int i0, j0;
    grid.unpack(k0, i0, j0);
    // strict boundary maximum at x0
    maxexcess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.num_nodes(); ++k) {
      if (k == k0) continue;
      maxexcess = std::max(maxexcess, sol.values[k] - sol.values[k0]);
    }
    const int dir = seg.side == 0 ? 1 : -1;
    const int i1 = seg.axis == 0 ? i0 + dir : i0;
    const int j1 = seg.axis == 1 ? j0 + dir : j0;
    const double step = std::abs(seg.axis == 0
                                     ? grid.axes[0].x[i1] - grid.axes[0].x[i0]
                                     : grid.axes[1].x[j1] - grid.axes[1].x[j0]);
    quotient = (sol.values[grid.index(i1, j1)] - sol.values[k0]) / step;
  };

  double q1, excess1;
  run(dom, q1, excess1);
  if (excess1 >= 0.0) {
    throw InputError("check_hopf: scenario does not produce a strict boundary maximum");
  }
  double q2, excess2;
  run(refine_grid(dom), q2, excess2);

  rep.trials = 1;
  rep.tolerance = 0.0;
  const double change = std::abs(q2 - q1) / std::max(std::abs(q1), 1e-300);
  char note[160];
  snprintf(note, sizeof note,
           "inward quotient %.6g, refined %.6g, relative change %.3g", q1, q2,
           change);
  rep.notes.push_back(note);
  bool ok = q1 < 0.0 && q2 < 0.0;
  if (sc.expected_slope != 0.0) {
    ok = ok && sgn(sc.expected_slope) == (q1 < 0 ? -1.0 : 1.0);
    snprintf(note, sizeof note, "reference slope %.6g", sc.expected_slope);
    rep.notes.push_back(note);
  }
  if (!ok) {
    rep.failures = 1;
    rep.worst = {"inward derivative not negative at the boundary maximum", -1, q1, 0};
  }
  return rep;
}

PropertyReport check_strong_mp(const OperatorSpec& op, const DomainGrid& dom,
                               const ConditionPlan& plan) {
  PropertyReport rep;
  rep.property_id = "strong_maximum_principle";
  rep.tolerance = 1e-10;

  // strictly subharmonic scenario: f = -1, g = 0
  {
    const DiscreteProblem prob = assemble(
        op, dom, plan, [](const Point&) { return -1.0; },
        [](const Point&) { return 0.0; });
    if (!prob.diag.monotone) {
      rep.skipped = true;
      rep.skip_reason = "assembly is not monotone";
      return rep;
    }
    const DiscreteSolution sol = solve(prob);
    rep.trials++;
    const double umax = sol.values.maxCoeff();
    const double umin = sol.values.minCoeff();
    const double scale = std::max(1.0, std::abs(umax));
    if (umax - umin > 1e-12 * scale) {  // non-constant branch
      for (int k = 0; k < dom.num_nodes(); ++k) {
        if (prob.row_tags[k] == RowTag::dirichlet) continue;
        if (sol.values[k] > umax - 1e-10 * scale) {
          rep.failures++;
          rep.worst = {"interior or degenerate-boundary node attains the maximum",
                       k, umax - sol.values[k], 0};
          break;
        }
      }
    }
  }

  // exempt branch: constants are reproduced when c == 0
  if (zero_c_on_grid(op, dom)) {
    const DiscreteProblem prob = assemble(
        op, dom, plan, [](const Point&) { return 0.0; },
        [](const Point&) { return 5.0; });
    const DiscreteSolution sol = solve(prob);
    rep.trials++;
    const double dev = (sol.values.array() - 5.0).abs().maxCoeff();
    if (dev > 1e-12 * 5.0) {
      rep.failures++;
      rep.worst = {"constant solution not reproduced for c = 0", -1, dev, 1};
    }
  }
  return rep;
}

PropertyReport check_neumann_uniqueness(const OperatorSpec& op,
                                        const DomainGrid& dom) {
  PropertyReport rep;
  rep.property_id = "neumann_uniqueness";
  rep.tolerance = 1e-8;

  const BoundaryClassification cls = classify(op, dom);
  const ConditionPlan plan = neumann_plan(cls);
  const ScalarField zero = [](const Point&) { return 0.0; };
  const DiscreteProblem prob = assemble(op, dom, plan, zero, zero, zero);
  rep.trials = 1;

  // constant nullspace: all rows annihilate constants iff c == 0 everywhere
  const Eigen::VectorXd row_sums =
      prob.matrix * Eigen::VectorXd::Ones(dom.num_nodes());
  double msca = 0;
  for (int k = 0; k < prob.matrix.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(prob.matrix, k);
         it; ++it) {
      msca = std::max(msca, std::abs(it.value()));
    }
  }
  if (row_sums.cwiseAbs().maxCoeff() <= 1e-14 * msca) {
    rep.notes.push_back(
        "constant nullspace detected: c == 0, solutions unique up to constants");
    return rep;
  }

  const DiscreteSolution sol = solve(prob);
  const double unorm = sol.values.cwiseAbs().maxCoeff();
  if (unorm > 1e-8) {
    rep.failures = 1;
    rep.worst = {"nonzero solution of the homogeneous Neumann problem", -1, unorm, 0};
  }
  return rep;
}

PropertyReport check_growth_conjugation(const OperatorSpec& op,
                                        const Eigen::VectorXd& h,
                                        const DomainGrid& dom,
                                        const ConditionPlan& plan, int trials,
                                        uint64_t seed) {
  PropertyReport rep;
  rep.property_id = "growth_conjugation";
  rep.tolerance = 1e-10;

  const OperatorSpec conj = conjugate_exponential_affine(op, h);
  double chat_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dom.num_nodes(); ++k) {
    chat_min = std::min(chat_min, conj.c(dom.node_at(k)));
  }
  if (!(chat_min > 0)) {
    rep.skipped = true;
    char msg[128];
    snprintf(msg, sizeof msg,
             "precondition failed: conjugated c has minimum %.6g <= 0 on the grid",
             chat_min);
    rep.skip_reason = msg;
    return rep;
  }
  char note[96];
  snprintf(note, sizeof note, "conjugated c bounded below by %.6g", chat_min);
  rep.notes.push_back(note);

  const Box box = grid_box(dom);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Rng trial = rng.fork(t);
    const ScalarField fh = random_signed_field(trial, box, -1);
    const ScalarField gh = random_signed_field(trial, box, -1);
    DiscreteProblem prob = assemble(conj, dom, plan, fh, gh);
    if (!prob.diag.monotone) {
      rep.skipped = true;
      rep.skip_reason = "conjugated assembly is not monotone";
      return rep;
    }
    const DiscreteSolution sol = solve(prob);
    rep.trials++;
    // u = phi^{-1} u^ must obey the growth bound u <= C (1 + phi^{-1});
    // the certified u^ <= 0 makes C_emp = max u^/(1 + phi) non-positive
    double cemp = -std::numeric_limits<double>::infinity();
    int worst_node = -1;
    for (int k = 0; k < dom.num_nodes(); ++k) {
      const double phi = std::exp(-h.dot(dom.node_at(k)));
      const double v = sol.values[k] / (1.0 + phi);
      if (v > cemp) {
        cemp = v;
        worst_node = k;
      }
    }
    if (cemp > 1e-10) {
      rep.failures++;
      if (cemp > rep.worst.violation) {
        rep.worst = {"conjugated subsolution bound violated", worst_node, cemp,
                     static_cast<uint64_t>(t)};
      }
    }
  }
  return rep;
}

void write_report_csv(std::ostream& os, const std::vector<PropertyReport>& reports) {
  os << "property,trials,failures,pass,skipped,skip_reason,tolerance,"
     << "worst_node,worst_violation,worst_description\n";
  char buf[64];
  for (const auto& r : reports) {
    snprintf(buf, sizeof buf, "%.17g", r.tolerance);
    os << r.property_id << ',' << r.trials << ',' << r.failures << ','
       << (r.pass() ? 1 : 0) << ',' << (r.skipped ? 1 : 0) << ','
       << '"' << r.skip_reason << '"' << ',' << buf << ',' << r.worst.node << ',';
    snprintf(buf, sizeof buf, "%.17g", r.worst.violation);
    os << buf << ',' << '"' << r.worst.description << '"' << '\n';
  }
}

}  // namespace degell
