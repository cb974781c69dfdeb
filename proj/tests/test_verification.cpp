#include <doctest.h>

#include <cmath>
#include <sstream>

#include "degell/verification.hpp"

using namespace degell;

namespace {

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

struct HestonSetup {
  OperatorSpec op = make_heston(heston_ref());
  DomainGrid dom;
  ConditionPlan plan;
  explicit HestonSetup(int n = 21)
      : dom(DomainGrid::rectangle({0, 1}, {0, 1}, n, n)) {
    plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  }
};

}  // namespace

TEST_CASE("weak maximum principle holds over random trials") {
  HestonSetup s;
  const PropertyReport rep = check_weak_mp(s.op, s.dom, s.plan, 10, 91);
  CHECK(rep.trials == 10);
  CHECK(rep.failures == 0);
  CHECK(rep.pass());
}

TEST_CASE("weak MP reports are reproducible from the seed") {
  HestonSetup s;
  const PropertyReport r1 = check_weak_mp(s.op, s.dom, s.plan, 5, 1234);
  const PropertyReport r2 = check_weak_mp(s.op, s.dom, s.plan, 5, 1234);
  CHECK(r1.failures == r2.failures);
  CHECK(r1.worst.violation == r2.worst.violation);
  CHECK(r1.worst.node == r2.worst.node);
}

TEST_CASE("c = 0 equality form is exercised on the DH model") {
  const OperatorSpec op = make_dh_model(1.5, 2);
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 17, 17);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);
  const PropertyReport rep = check_weak_mp(op, dom, plan, 8, 7);
  CHECK(rep.pass());
}

TEST_CASE("negative control: flipped zeroth-order sign must fail") {
  // the wide log-price axis keeps the spectral gap of the c = 0 part well
  // below 1, so shifting c to -1 genuinely destroys the principle
  OperatorSpec bad = make_heston(heston_ref());
  bad.c = [](const Point&) { return -1.0; };
  const DomainGrid dom = DomainGrid::rectangle({-2, 2}, {0, 1}, 21, 21);
  const ConditionPlan plan =
      boundary_condition_plan(classify(bad, dom), Convention::c2s);
  const PropertyReport rep = check_weak_mp(bad, dom, plan, 10, 13);
  CHECK_FALSE(rep.skipped);
  CHECK(rep.failures > 0);
  CHECK(rep.worst.violation > 0);
}

TEST_CASE("negative control: the anti-monotone stencil violates the MP") {
  // central drift at high Peclet number; check_weak_mp refuses to run it,
  // and a direct solve shows the violation the guard protects against
  Eigen::MatrixXd a(1, 1);
  a(0, 0) = 0.01;
  Eigen::VectorXd b(1);
  b[0] = 5.0;
  const OperatorSpec op = make_constant(a, b, 1.0);
  const DomainGrid dom = DomainGrid::interval(0.0, 1.0, 21);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);

  AssemblyOptions central;
  central.upwind_drift = false;
  const ScalarField f = [](const Point& x) {
    return x[0] < 0.5 ? -1.0 : 0.0;  // f <= 0
  };
  const ScalarField g = [](const Point&) { return 0.0; };
  const DiscreteProblem prob = assemble(op, dom, plan, f, g, {}, central);
  REQUIRE_FALSE(prob.diag.monotone);
  const DiscreteSolution sol = solve(prob);
  CHECK(sol.values.maxCoeff() > 1e-10);  // oscillations break the principle

  const PropertyReport rep = check_weak_mp(op, dom, plan, 3, 5);
  CHECK(rep.pass());  // upwinded assembly is fine
}

TEST_CASE("hopf inequality for the kummer scenario") {
  // u = k M(alpha, beta; x) with k < 0 has its strict maximum at x = 0 and
  // u_x(0) = k alpha / beta
  const double alpha = 1.0, beta = 1.0, k = -1.0;
  const OperatorSpec op = make_kummer(alpha, beta);
  const DomainGrid dom = DomainGrid::interval(0.0, 1.0, 65);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);

  HopfScenario sc;
  sc.f = [](const Point&) { return 0.0; };
  sc.g = [k](const Point&) { return k * std::exp(1.0); };
  sc.segment_label = "left";
  sc.t = 0.0;
  sc.expected_slope = k * alpha / beta;

  const PropertyReport rep = check_hopf(op, dom, plan, sc);
  CHECK(rep.pass());
  REQUIRE_FALSE(rep.notes.empty());
  // quotient reported in the notes approaches k alpha/beta = -1
  CHECK(rep.notes[0].find("inward quotient") != std::string::npos);
}

TEST_CASE("hopf inequality at a non-degenerate boundary point") {
  // boundary data peaked at x0 = (1, 0.5): u has a strict maximum there with
  // value 0 and the whole solution is negative elsewhere
  HestonSetup s(33);
  HopfScenario sc;
  sc.f = [](const Point&) { return -1.0; };
  sc.g = [](const Point& x) {
    return -((x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 0.5) * (x[1] - 0.5));
  };
  sc.segment_label = "right";
  sc.t = 0.5;
  const PropertyReport rep = check_hopf(s.op, s.dom, s.plan, sc);
  CHECK(rep.pass());
}

TEST_CASE("hopf scenario without a strict maximum is rejected") {
  HestonSetup s;
  HopfScenario sc;
  sc.f = [](const Point&) { return 0.0; };
  sc.g = [](const Point&) { return 0.0; };
  sc.segment_label = "right";
  sc.t = 0.5;
  CHECK_THROWS_AS(check_hopf(s.op, s.dom, s.plan, sc), InputError);
}

TEST_CASE("strong maximum principle contrapositive") {
  SUBCASE("heston") {
    HestonSetup s;
    const PropertyReport rep = check_strong_mp(s.op, s.dom, s.plan);
    CHECK(rep.pass());
    CHECK(rep.trials == 1);
  }
  SUBCASE("dh model runs the constant-exempt branch too") {
    const OperatorSpec op = make_dh_model(2.0, 2);
    const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 17, 17);
    const ConditionPlan plan =
        boundary_condition_plan(classify(op, dom), Convention::c2s);
    const PropertyReport rep = check_strong_mp(op, dom, plan);
    CHECK(rep.pass());
    CHECK(rep.trials == 2);
  }
}

TEST_CASE("neumann uniqueness") {
  SUBCASE("positive rate pins the solution to zero") {
    HestonSetup s;
    const PropertyReport rep = check_neumann_uniqueness(s.op, s.dom);
    CHECK(rep.pass());
    CHECK(rep.notes.empty());
  }

  SUBCASE("c = 0 exposes the constant nullspace") {
    const OperatorSpec op = make_dh_model(1.5, 2);
    const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 13, 13);
    const PropertyReport rep = check_neumann_uniqueness(op, dom);
    CHECK(rep.pass());
    REQUIRE_FALSE(rep.notes.empty());
    CHECK(rep.notes[0].find("constant nullspace") != std::string::npos);
  }

  SUBCASE("c positive only on a subregion still suffices") {
    OperatorSpec op = make_heston(heston_ref());
    op.c = [](const Point& x) { return x[0] > 0.5 ? 0.05 : 0.0; };
    const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 17, 17);
    const PropertyReport rep = check_neumann_uniqueness(op, dom);
    CHECK(rep.pass());
    CHECK(rep.notes.empty());
  }
}

TEST_CASE("growth-condition conjugation") {
  HestonParams p;
  p.kappa = 2.0;
  p.sigma = 1.0;
  p.rho = 0.0;
  p.theta = 0.1;
  p.r = 0.05;
  p.q = 0.0;
  const OperatorSpec op = make_heston(p);
  const DomainGrid dom = DomainGrid::rectangle({0, 1}, {0, 1}, 17, 17);
  const ConditionPlan plan = boundary_condition_plan(classify(op, dom), Convention::c2s);

  SUBCASE("admissible (L, N) passes") {
    const LnConditionResult ln = check_heston_ln_condition(p, 0.0, 0.2);
    REQUIRE(ln.holds);
    const PropertyReport rep =
        check_growth_conjugation(op, Eigen::Vector2d(0.0, 0.2), dom, plan, 6, 77);
    CHECK_FALSE(rep.skipped);
    CHECK(rep.pass());
    CHECK(rep.trials == 6);
  }

  SUBCASE("h = 0 reduces to the plain weak MP") {
    const PropertyReport rep =
        check_growth_conjugation(op, Eigen::Vector2d(0.0, 0.0), dom, plan, 4, 78);
    CHECK_FALSE(rep.skipped);
    CHECK(rep.pass());
  }

  SUBCASE("inadmissible (L, N) produces a precondition report") {
    const LnConditionResult ln = check_heston_ln_condition(p, 0.0, 5.0);
    REQUIRE_FALSE(ln.holds);
    const PropertyReport rep =
        check_growth_conjugation(op, Eigen::Vector2d(0.0, 5.0), dom, plan, 4, 79);
    CHECK(rep.skipped);
    CHECK(rep.skip_reason.find("precondition") != std::string::npos);
  }
}

TEST_CASE("report CSV round trip") {
  HestonSetup s;
  std::vector<PropertyReport> reports;
  reports.push_back(check_weak_mp(s.op, s.dom, s.plan, 3, 17));
  reports.push_back(check_strong_mp(s.op, s.dom, s.plan));
  std::ostringstream os;
  write_report_csv(os, reports);
  const std::string csv = os.str();
  CHECK(csv.find("property,trials,failures") != std::string::npos);
  CHECK(csv.find("weak_maximum_principle") != std::string::npos);
  CHECK(csv.find("strong_maximum_principle") != std::string::npos);
}
