#include <doctest.h>

#include <cmath>
#include <sstream>

#include "degell/obstacle.hpp"

using namespace degell;

namespace {

const ScalarField kZero = [](const Point&) { return 0.0; };
const ScalarField kOne = [](const Point&) { return 1.0; };

HestonParams heston_ref() {
  HestonParams p;
  p.kappa = 1.5;
  p.theta = 0.04;
  p.sigma = 0.3;
  p.rho = 0.0;
  p.r = 0.05;
  p.q = 0.0;
  return p;
}

struct KummerSetup {
  OperatorSpec op = make_kummer(1.0, 1.0);
  DomainGrid dom;
  ConditionPlan plan;
  explicit KummerSetup(int n) : dom(DomainGrid::interval(0.0, 1.0, n)) {
    plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  }
};

Eigen::VectorXd grid_eval(const DomainGrid& g, const ScalarField& f) {
  Eigen::VectorXd v(g.num_nodes());
  for (int k = 0; k < g.num_nodes(); ++k) v[k] = f(g.node_at(k));
  return v;
}

}  // namespace

TEST_CASE("a very low obstacle reproduces the unconstrained solve") {
  KummerSetup s(31);
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, kZero, g);
  const Eigen::VectorXd unconstrained = solve(prob).values;

  ObstacleSpec spec;
  spec.psi = [](const Point&) { return -1e6; };
  spec.f = kZero;
  spec.g = g;
  PsorOptions opts;
  const ObstacleSolution sol = solve_obstacle(prob, spec, opts);
  CHECK(spec.compat_checked);
  CHECK((sol.values - unconstrained).cwiseAbs().maxCoeff() <= 2.0 * opts.tol);
  for (char a : sol.active_set) CHECK(a == 0);
}

TEST_CASE("fully active constant solution") {
  // c = 1, f = 0, psi = g = 1: u = 1 with Au - f = 1 >= 0 everywhere active
  const OperatorSpec op = make_constant(Eigen::Matrix2d::Identity(),
                                        Eigen::Vector2d(0, 0), 1.0);
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 9, 9);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  const DiscreteProblem prob = assemble(op, dom, plan, kZero, kOne);
  ObstacleSpec spec{kOne, kZero, kOne, false};
  const ObstacleSolution sol = solve_obstacle(prob, spec);
  CHECK((sol.values.array() - 1.0).abs().maxCoeff() <= 1e-9);
  for (int k = 0; k < dom.num_nodes(); ++k) {
    if (prob.row_tags[k] != RowTag::dirichlet) CHECK(sol.active_set[k] == 1);
  }
}

TEST_CASE("kummer obstacle matches the enumeration oracle") {
  // f = -3 pulls the unconstrained solution below psi = 0.5 near the origin
  const ScalarField f = [](const Point&) { return -3.0; };
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  const ScalarField psi = [](const Point&) { return 0.5; };

  SUBCASE("interval search on 21 nodes") {
    KummerSetup s(21);
    const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);
    ObstacleSpec spec{psi, f, g, false};
    const ObstacleSolution sol = solve_obstacle(prob, spec);
    const Eigen::VectorXd ref = reference_obstacle_solve(
        prob, grid_eval(s.dom, psi), EnumerationMode::intervals);
    CHECK((sol.values - ref).cwiseAbs().maxCoeff() <= 1e-8);

    // active set is a left interval and the solution stays feasible
    int last_active = -1;
    for (int k = 0; k < s.dom.num_nodes(); ++k) {
      if (sol.active_set[k]) last_active = k;
    }
    REQUIRE(last_active >= 0);
    for (int k = 0; k <= last_active; ++k) {
      if (prob.row_tags[k] != RowTag::dirichlet) CHECK(sol.active_set[k] == 1);
    }
    for (int k = 0; k < s.dom.num_nodes(); ++k) {
      CHECK(sol.values[k] >= 0.5 - 1e-9);
    }
    CHECK(sol.complementarity_residual <= 1e-8);
  }

  SUBCASE("generic subset search agrees on 13 nodes") {
    KummerSetup s(13);
    const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);
    ObstacleSpec spec{psi, f, g, false};
    const ObstacleSolution sol = solve_obstacle(prob, spec);
    const Eigen::VectorXd ref_generic = reference_obstacle_solve(
        prob, grid_eval(s.dom, psi), EnumerationMode::generic);
    const Eigen::VectorXd ref_interval = reference_obstacle_solve(
        prob, grid_eval(s.dom, psi), EnumerationMode::intervals);
    CHECK((ref_generic - ref_interval).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((sol.values - ref_generic).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SUBCASE("enumeration caps") {
    KummerSetup s(21);
    const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);
    CHECK_THROWS_AS(reference_obstacle_solve(prob, grid_eval(s.dom, psi),
                                             EnumerationMode::generic),
                    ParameterError);
  }
}

TEST_CASE("compatibility between obstacle and boundary data is enforced") {
  KummerSetup s(11);
  const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, kZero, kZero);
  ObstacleSpec spec{kOne, kZero, kZero, false};  // psi = 1 > g = 0
  CHECK_THROWS_AS(solve_obstacle(prob, spec), InputError);
}

TEST_CASE("omega sweep leaves the solution unchanged") {
  KummerSetup s(21);
  const ScalarField f = [](const Point&) { return -3.0; };
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  ObstacleSpec spec{[](const Point&) { return 0.5; }, f, g, false};
  const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);

  PsorOptions o1;
  o1.omega = 1.0;
  PsorOptions o2;
  o2.omega = 1.3;
  PsorOptions o3;
  o3.omega = 1.7;
  const Eigen::VectorXd u1 = solve_obstacle(prob, spec, o1).values;
  const Eigen::VectorXd u2 = solve_obstacle(prob, spec, o2).values;
  const Eigen::VectorXd u3 = solve_obstacle(prob, spec, o3).values;
  CHECK((u1 - u2).cwiseAbs().maxCoeff() <= 10 * o1.tol);
  CHECK((u1 - u3).cwiseAbs().maxCoeff() <= 10 * o1.tol);

  CHECK_THROWS_AS(solve_obstacle(prob, spec, PsorOptions{2.5, 1e-10, 1000}),
                  ParameterError);
}

TEST_CASE("obstacle comparison principle") {
  KummerSetup s(21);
  const ScalarField f1 = [](const Point&) { return -2.0; };
  const ScalarField f2 = [](const Point&) { return -2.4; };
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  const ScalarField psi1 = [](const Point&) { return 0.6; };
  const ScalarField psi2 = [](const Point&) { return 0.5; };

  const DiscreteProblem p1 = assemble(s.op, s.dom, s.plan, f1, g);
  const DiscreteProblem p2 = assemble(s.op, s.dom, s.plan, f2, g);
  ObstacleSpec s1{psi1, f1, g, false};
  ObstacleSpec s2{psi2, f2, g, false};
  const ObstacleSolution u1 = solve_obstacle(p1, s1);
  const ObstacleSolution u2 = solve_obstacle(p2, s2);

  SUBCASE("ordered data gives ordered solutions") {
    const ComparisonReport rep = obstacle_comparison(p1, u1, u2, s1, s2);
    CHECK(rep.ok);
  }

  SUBCASE("identical inputs give zero violation") {
    const ComparisonReport rep = obstacle_comparison(p1, u1, u1, s1, s1);
    CHECK(rep.ok);
    CHECK(rep.max_violation <= 0.0);
  }

  SUBCASE("misordered inputs are rejected with the offending node") {
    CHECK_THROWS_AS(obstacle_comparison(p1, u2, u1, s2, s1), InputError);
  }
}

TEST_CASE("obstacle stability bound") {
  KummerSetup s(21);
  const ScalarField f = [](const Point&) { return -2.0; };
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  const double delta = 0.07;
  const ScalarField psi1 = [](const Point&) { return 0.5; };
  const ScalarField psi2 = [delta](const Point&) { return 0.5 + delta; };

  const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);
  ObstacleSpec s1{psi1, f, g, false};
  ObstacleSpec s2{psi2, f, g, false};
  const ObstacleSolution u1 = solve_obstacle(prob, s1);
  const ObstacleSolution u2 = solve_obstacle(prob, s2);

  const StabilityReport rep = obstacle_stability(prob, u1, u2, s1, s2, 1.0);
  CHECK(rep.ok);
  CHECK(rep.lhs <= delta + 1e-8);  // the psi-only bound
  CHECK(rep.rhs == doctest::Approx(delta));

  const StabilityReport same = obstacle_stability(prob, u1, u1, s1, s1, 1.0);
  CHECK(same.ok);
  CHECK(same.lhs <= 1e-12);
}

TEST_CASE("solution is dominated by supersolutions with non-negative slack") {
  KummerSetup s(17);
  const ScalarField f = [](const Point&) { return -2.0; };
  const ScalarField g = [](const Point&) { return std::exp(1.0); };
  const ScalarField psi = [](const Point&) { return 0.4; };
  ObstacleSpec base{psi, f, g, false};
  const DiscreteProblem prob = assemble(s.op, s.dom, s.plan, f, g);
  const ObstacleSolution u = solve_obstacle(prob, base);

  Rng rng(55);
  for (int t = 0; t < 5; ++t) {
    const double slack = rng.fork(t).uniform(0.0, 1.0);
    const ScalarField fs = [f, slack](const Point& x) { return f(x) + slack; };
    const DiscreteProblem ps = assemble(s.op, s.dom, s.plan, fs, g);
    ObstacleSpec sup{psi, fs, g, false};
    const ObstacleSolution v = solve_obstacle(ps, sup);
    CHECK((u.values - v.values).maxCoeff() <= 1e-8);
  }
}

TEST_CASE("randomized stability trials on the heston grid") {
  const OperatorSpec op = make_heston(heston_ref());
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 15, 15);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  const double c0 = heston_ref().r;
  Rng rng(808);
  for (int t = 0; t < 8; ++t) {
    Rng trial = rng.fork(t);
    const double a = trial.uniform(-0.5, 0.5);
    const double dpsi = trial.uniform(0.0, 0.2);
    const double df = trial.uniform(0.0, 0.2);
    const ScalarField psi1 = [](const Point& x) {
      return 0.2 - (x[0] - 0.5) * (x[0] - 0.5) - x[1] * x[1];
    };
    const ScalarField psi2 = [psi1, dpsi](const Point& x) { return psi1(x) + dpsi; };
    const ScalarField f1 = [a](const Point& x) { return a * std::sin(3 * x[0]); };
    const ScalarField f2 = [f1, df](const Point& x) { return f1(x) + df; };
    const ScalarField g1 = [psi1](const Point& x) { return std::max(psi1(x), 0.0); };
    const ScalarField g2 = [psi2](const Point& x) { return std::max(psi2(x), 0.0) + 1e-12; };

    const DiscreteProblem p1 = assemble(op, dom, plan, f1, g1);
    const DiscreteProblem p2 = assemble(op, dom, plan, f2, g2);
    ObstacleSpec s1{psi1, f1, g1, false};
    ObstacleSpec s2{psi2, f2, g2, false};
    const ObstacleSolution u1 = solve_obstacle(p1, s1);
    const ObstacleSolution u2 = solve_obstacle(p2, s2);
    CHECK(u1.complementarity_residual <= 1e-8);
    CHECK(u2.complementarity_residual <= 1e-8);
    CHECK(obstacle_stability(p1, u1, u2, s1, s2, c0).ok);
  }
}

TEST_CASE("a-priori obstacle bounds") {
  const OperatorSpec op = make_heston(heston_ref());
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 15, 15);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  // f <= 0, c >= 0: u <= 0 v max g v max psi
  const ScalarField f = [](const Point&) { return -0.3; };
  const ScalarField psi = [](const Point& x) {
    return 0.15 - (x[0] - 0.5) * (x[0] - 0.5) - x[1];
  };
  const ScalarField g = [](const Point& x) { return 0.05 * (1.0 - x[1]); };
  const DiscreteProblem prob = assemble(op, dom, plan, f, g);
  ObstacleSpec spec{psi, f, g, false};
  const ObstacleSolution sol = solve_obstacle(prob, spec);

  double gmax = 0, pmax = -1e300;
  for (int k = 0; k < dom.num_nodes(); ++k) {
    const Point x = dom.node_at(k);
    if (prob.row_tags[k] == RowTag::dirichlet) gmax = std::max(gmax, g(x));
    pmax = std::max(pmax, psi(x));
  }
  const double bound = std::max({0.0, gmax, pmax});
  CHECK(sol.values.maxCoeff() <= bound + 1e-8);

  // feasibility
  for (int k = 0; k < dom.num_nodes(); ++k) {
    CHECK(sol.values[k] >= psi(dom.node_at(k)) - 1e-9);
  }

  // arbitrary-sign f with c >= c0: the bound gains the (1/c0) sup f term
  const double c0 = heston_ref().r;
  const ScalarField fpos = [](const Point& x) { return 0.3 * std::cos(x[0]); };
  const DiscreteProblem prob2 = assemble(op, dom, plan, fpos, g);
  ObstacleSpec spec2{psi, fpos, g, false};
  const ObstacleSolution sol2 = solve_obstacle(prob2, spec2);
  double fmax = 0;
  for (int k = 0; k < dom.num_nodes(); ++k) {
    if (prob2.row_tags[k] != RowTag::dirichlet) {
      fmax = std::max(fmax, fpos(dom.node_at(k)));
    }
  }
  CHECK(sol2.values.maxCoeff() <= std::max({0.0, fmax / c0, gmax, pmax}) + 1e-8);
}

TEST_CASE("free boundary extraction and active-set export") {
  const OperatorSpec op = make_heston(heston_ref());
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 15, 15);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  const ScalarField psi = [](const Point& x) {
    return 0.2 - (x[0] - 0.5) * (x[0] - 0.5) - x[1] * x[1];
  };
  const ScalarField g = [psi](const Point& x) { return std::max(psi(x), 0.0); };
  const DiscreteProblem prob = assemble(op, dom, plan, kZero, g);
  ObstacleSpec spec{psi, kZero, g, false};
  const ObstacleSolution sol = solve_obstacle(prob, spec);

  std::ostringstream os;
  write_active_set_csv(os, dom, sol);
  CHECK(os.str().find("x,y,value,active") != std::string::npos);

  const Eigen::VectorXd psiv = grid_eval(dom, psi);
  const auto polyline = extract_free_boundary_2d(dom, sol, psiv, 1e-9);
  // the obstacle binds somewhere strictly inside, so crossings exist
  CHECK(!polyline.empty());
  for (const auto& p : polyline) {
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 1.0);
    CHECK(p[1] >= 0.0);
    CHECK(p[1] <= 1.0);
  }
}
