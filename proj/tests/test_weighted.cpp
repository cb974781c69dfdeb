#include <doctest.h>

#include <cmath>

#include "degell/weighted.hpp"
#include "support/test_oracles.hpp"

using namespace degell;
namespace oracle = test_oracles;

namespace {

Point pt(double x, double y) {
  Point p(2);
  p[0] = x;
  p[1] = y;
  return p;
}

TestFunction constant_field(int dim, double v) {
  TestFunction f;
  f.val = [v](const Point&) { return v; };
  f.grad = [dim](const Point&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Zero(dim);
  };
  f.hess = [dim](const Point&) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Zero(dim, dim);
  };
  return f;
}

// u = y (the degeneracy direction)
TestFunction linear_y_field() {
  TestFunction f;
  f.val = [](const Point& x) { return x[1]; };
  f.grad = [](const Point&) -> Eigen::VectorXd { return Eigen::Vector2d(0, 1); };
  f.hess = [](const Point&) -> Eigen::MatrixXd { return Eigen::Matrix2d::Zero(); };
  return f;
}

TestFunction scaled(const TestFunction& f, double c) {
  TestFunction out;
  out.val = [f, c](const Point& x) { return c * f.val(x); };
  out.grad = [f, c](const Point& x) -> Eigen::VectorXd { return c * f.grad(x); };
  if (f.hess) {
    out.hess = [f, c](const Point& x) -> Eigen::MatrixXd { return c * f.hess(x); };
  }
  return out;
}

TestFunction sum(const TestFunction& f, const TestFunction& g) {
  TestFunction out;
  out.val = [f, g](const Point& x) { return f.val(x) + g.val(x); };
  out.grad = [f, g](const Point& x) -> Eigen::VectorXd {
    return f.grad(x) + g.grad(x);
  };
  return out;
}

HestonParams heston_for_beta(double beta) {
  HestonParams p;
  p.kappa = 1.5;
  p.sigma = 0.3;
  p.theta = beta * p.sigma * p.sigma / (2 * p.kappa);
  p.rho = -0.3;
  p.r = 0.05;
  p.q = 0.0;
  return p;
}

}  // namespace

TEST_CASE("weighted L2 norm of the constant against the gamma-function value") {
  const double beta = 0.6, gamma = 1.0, mu = 2.0;
  const WeightSpec ws = WeightSpec::heston_family(2, beta, gamma, mu);
  const Box box = {{-1.5, 1.5}, {0.0, 4.0}};
  const WeightedNorm n = norm_L2w(constant_field(2, 1.0), ws, box);
  const double exact =
      std::sqrt(oracle::kink_factor(gamma, 1.5) * oracle::weighted_moment(beta, mu, 4.0, 0));
  CHECK(n.value == doctest::Approx(exact).epsilon(1e-10));
  CHECK(n.refinement_delta <= 1e-8 * n.value);

  CHECK(norm_L2w(constant_field(2, 0.0), ws, box).value == doctest::Approx(0.0));
}

TEST_CASE("weighted H1 norms against incomplete-gamma moments") {
  const double beta = 1.4, gamma = 0.7, mu = 1.0;
  const WeightSpec ws = WeightSpec::heston_family(2, beta, gamma, mu);
  const Box box = {{-1.0, 1.0}, {0.0, 5.0}};
  const double xf = oracle::kink_factor(gamma, 1.0);
  auto mom = [&](int k) { return oracle::weighted_moment(beta, mu, 5.0, k); };

  SUBCASE("u = 1") {
    const WeightedNorm n = norm_H1w(constant_field(2, 1.0), ws, box);
    CHECK(n.value ==
          doctest::Approx(std::sqrt(xf * (mom(0) + mom(1)))).epsilon(1e-10));
  }

  SUBCASE("u = y") {
    // theta |Du|^2 + (1 + theta) u^2 = y + y^2 + y^3
    const WeightedNorm n = norm_H1w(linear_y_field(), ws, box);
    CHECK(n.value ==
          doctest::Approx(std::sqrt(xf * (mom(1) + mom(2) + mom(3)))).epsilon(1e-10));
  }

  SUBCASE("homogeneity and triangle inequality") {
    Rng rng(42);
    for (int t = 0; t < 5; ++t) {
      Rng trial = rng.fork(t);
      const TestFunction u = random_fourier_field(trial, box);
      const TestFunction v = random_fourier_field(trial, box);
      const double nu = norm_H1w(u, ws, box).value;
      const double nv = norm_H1w(v, ws, box).value;
      CHECK(norm_H1w(scaled(u, 2.0), ws, box).value ==
            doctest::Approx(2.0 * nu).epsilon(1e-12));
      CHECK(norm_H1w(sum(u, v), ws, box).value <= nu + nv + 1e-8 * (nu + nv));
    }
  }
}

TEST_CASE("weighted H2 norm") {
  const double beta = 1.4, mu = 1.0;
  const WeightSpec ws = WeightSpec::heston_family(2, beta, 0.0, mu);
  const Box box = {{-1.0, 1.0}, {0.0, 5.0}};
  const double xf = 2.0;
  auto mom = [&](int k) { return oracle::weighted_moment(beta, mu, 5.0, k); };

  // u = 1: sqrt(int (1 + theta^2) w)
  CHECK(norm_H2w(constant_field(2, 1.0), ws, box).value ==
        doctest::Approx(std::sqrt(xf * (mom(0) + mom(2)))).epsilon(1e-10));
  // u = y has no second-derivative contribution:
  // (1 + y^2)(|Du|^2 + u^2) = (1 + y^2)^2 -> moments 0, 2, 4
  CHECK(norm_H2w(linear_y_field(), ws, box).value ==
        doctest::Approx(std::sqrt(xf * (mom(0) + 2 * mom(2) + mom(4)))).epsilon(1e-10));
}

TEST_CASE("divergence-form drift coefficients") {
  SUBCASE("unit weight and constant a leave the drift alone") {
    const OperatorSpec op = make_constant(Eigen::Matrix2d::Identity(),
                                          Eigen::Vector2d(0.4, -0.7), 0.3);
    const BilinearCoefficients bc = divergence_coefficients(op, WeightSpec::unit(2));
    const Point x = pt(0.3, 0.8);
    CHECK((bc.b(x) - op.b(x)).norm() <= 1e-14);
    CHECK(bc.c(x) == doctest::Approx(op.c(x)));
  }

  SUBCASE("heston recovers the reference divergence-form drift") {
    const HestonParams raw = heston_for_beta(1.3);
    const double gamma = 0.9;
    const HestonWeightBundle bundle = heston_weight(raw, gamma);
    // normalization r - q - rho kappa theta / sigma = 0 holds for the shifted q
    CHECK(bundle.normalized.r - bundle.normalized.q -
              bundle.normalized.rho * bundle.normalized.kappa *
                  bundle.normalized.theta / bundle.normalized.sigma ==
          doctest::Approx(0.0).epsilon(1e-15));

    const OperatorSpec op = make_heston(bundle.normalized);
    const BilinearCoefficients bc = divergence_coefficients(op, bundle.ws);
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
      const double x = rng.uniform(-2.0, 2.0);
      const double y = rng.uniform(1e-3, 3.0);
      const Eigen::VectorXd b = bc.b(pt(x, y));
      const double sgnx = x > 0 ? 1.0 : -1.0;
      const double b1 = y * (0.5 * gamma * sgnx +
                             raw.rho * raw.kappa / raw.sigma - 0.5);
      const double b2 = 0.5 * gamma * y * sgnx * raw.rho * raw.sigma;
      CHECK(b[0] == doctest::Approx(b1).epsilon(1e-10));
      CHECK(b[1] == doctest::Approx(b2).epsilon(1e-10));
      CHECK(bc.c(pt(x, y)) == doctest::Approx(raw.r));
    }
  }

  SUBCASE("kummer with the Laguerre-type weight is self-adjoint") {
    const double beta = 1.7;
    const OperatorSpec op = make_kummer(0.5, beta);
    const WeightSpec ws = WeightSpec::heston_family(1, beta, 0.0, 1.0);
    const BilinearCoefficients bc = divergence_coefficients(op, ws);
    for (double x : {0.05, 0.4, 1.3, 5.0}) {
      Point p(1);
      p[0] = x;
      CHECK(std::abs(bc.b(p)[0]) <= 1e-12 * (1.0 + x));
    }
  }
}

TEST_CASE("bilinear form basics") {
  const double beta = 1.2, mu = 1.0;
  const WeightSpec ws = WeightSpec::heston_family(1, beta, 0.0, mu);
  const Box box = {{0.0, 4.0}};
  const OperatorSpec op = make_kummer(0.8, beta);

  SUBCASE("constants see only the zeroth-order coefficient") {
    const double value =
        bilinear_form(op, ws, constant_field(1, 1.0), constant_field(1, 1.0), box);
    // a(1,1) = int c w = alpha Gamma(beta)/mu^beta on the truncated axis
    const double exact = 0.8 * oracle::weighted_moment(beta, mu, 4.0, 0);
    CHECK(value == doctest::Approx(exact).epsilon(1e-9));
  }

  SUBCASE("symmetry when the induced drift vanishes") {
    // the Laguerre-type pairing (mu = 1) eliminates the first-order term
    const WeightSpec lag = WeightSpec::heston_family(1, beta, 0.0, 1.0);
    Rng rng(17);
    const Box b1 = {{0.0, 4.0}};
    for (int t = 0; t < 5; ++t) {
      Rng trial = rng.fork(t);
      const TestFunction u = random_fourier_field(trial, b1);
      const TestFunction v = random_fourier_field(trial, b1);
      const double auv = bilinear_form(op, lag, u, v, b1);
      const double avu = bilinear_form(op, lag, v, u, b1);
      CHECK(auv == doctest::Approx(avu).epsilon(1e-8));
    }
  }
}

TEST_CASE("integration by parts identity") {
  SUBCASE("classical Green identity for a = I, w = 1") {
    const OperatorSpec op = make_constant(Eigen::Matrix2d::Identity(),
                                          Eigen::Vector2d(0.3, -0.2), 0.7);
    const WeightSpec ws = WeightSpec::unit(2);
    const Box box = {{0.0, 1.0}, {0.0, 1.0}};
    QuadratureSpec qs;
    qs.pts = 12;
    qs.panels = 12;
    const IbpReport rep = verify_ibp(op, ws, box, 5, 123, qs);
    CHECK(rep.max_rel_discrepancy <= 1e-8);
  }

  SUBCASE("heston with the reference weight") {
    for (double beta : {0.6, 1.4}) {
      const HestonWeightBundle bundle = heston_weight(heston_for_beta(beta), 1.0);
      const OperatorSpec op = make_heston(bundle.normalized);
      const Box box = {{-1.0, 1.0}, {0.0, 1.0}};
      const IbpReport rep = verify_ibp(op, bundle.ws, box, 5, 321);
      CHECK(rep.max_rel_discrepancy <= 1e-6);
    }
  }

  SUBCASE("v = 0 gives zero on both sides") {
    const OperatorSpec op = make_kummer(1.0, 1.0);
    const WeightSpec ws = WeightSpec::heston_family(1, 1.0, 0.0, 1.0);
    const Box box = {{0.0, 2.0}};
    const double lhs =
        bilinear_form(op, ws, constant_field(1, 1.0), constant_field(1, 0.0), box);
    CHECK(lhs == doctest::Approx(0.0));
  }
}

TEST_CASE("theta times w vanishes toward the degenerate boundary") {
  for (double beta : {0.6, 1.0, 1.7}) {
    const WeightSpec ws = WeightSpec::heston_family(2, beta, 0.5, 1.0);
    double prev = 1e300;
    for (int k = 1; k <= 40; ++k) {
      const double y = std::ldexp(1.0, -k);
      Point p(2);
      p[0] = 0.3;
      p[1] = y;
      const double tw = ws.theta(p) * ws.w(p);
      CHECK(tw > 0);
      CHECK(tw < prev);
      prev = tw;
    }
    CHECK(prev < 1e-6);  // theta w = y^beta e^{...} -> 0 for every beta > 0
  }
}

TEST_CASE("bilinear map with a nonzero divergence-form coefficient") {
  // a = I, w = 1, constant d: the drift correction b - d keeps the
  // integration-by-parts identity exact
  OperatorSpec op = make_constant(Eigen::Matrix2d::Identity(),
                                  Eigen::Vector2d(0.4, -0.1), 0.6);
  op.div_d = [](const Point&) -> Eigen::VectorXd {
    return Eigen::Vector2d(0.2, -0.3);
  };
  const WeightSpec ws = WeightSpec::unit(2);
  const Point probe = pt(0.3, 0.4);
  const BilinearCoefficients bc = divergence_coefficients(op, ws);
  CHECK((bc.b(probe) - (op.b(probe) - op.div_d(probe))).norm() <= 1e-13);
  CHECK(bc.c(probe) == doctest::Approx(0.6).epsilon(1e-9));

  QuadratureSpec qs;
  qs.pts = 12;
  qs.panels = 12;
  const IbpReport rep = verify_ibp(op, ws, {{0.0, 1.0}, {0.0, 1.0}}, 4, 77, qs);
  CHECK(rep.max_rel_discrepancy <= 1e-8);

  // same identity on a singular weight: d w and a w still vanish at the
  // degenerate endpoint, so the boundary terms drop out
  OperatorSpec ku = make_kummer(0.7, 1.3);
  ku.div_d = [](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd d(1);
    d[0] = 0.3 * x[0];
    return d;
  };
  const WeightSpec kws = WeightSpec::heston_family(1, 1.3, 0.0, 1.0);
  const IbpReport krep = verify_ibp(ku, kws, {{0.0, 2.0}}, 4, 78);
  CHECK(krep.max_rel_discrepancy <= 1e-7);
}

TEST_CASE("sobolev exponent arithmetic") {
  CHECK(sobolev_exponent_q(2.0, 0.5, 2) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sobolev_exponent_q(2.0, 1.0, 3) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sobolev_lambda(2.0, 4.0) == doctest::Approx(1.0));
  CHECK(sobolev_lambda(4.0, 4.0) == doctest::Approx(0.0));
  CHECK(sobolev_lambda(3.0, 4.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(sobolev_exponent_q(0.5, 0.5, 2), InputError);
  CHECK_THROWS_AS(sobolev_exponent_q(2.0, -0.1, 2), InputError);
  CHECK_THROWS_AS(sobolev_lambda(1.5, 4.0), InputError);
  CHECK_THROWS_AS(sobolev_lambda(5.0, 4.0), InputError);
}

TEST_CASE("power-weighted sobolev probe") {
  const Box box = {{-1.0, 1.0}, {0.0, 1.0}};
  const SobolevProbeReport rep = probe_sobolev_inequality(0.0, 0.5, 2.0, box, 25, 99);
  CHECK(rep.ratios.size() + rep.skipped == 25);
  CHECK(rep.c_emp_refined > 0.0);
  CHECK(std::isfinite(rep.c_emp_refined));
  CHECK(rep.drift < 0.10);

  SUBCASE("the ratio is scale invariant") {
    const double q = sobolev_exponent_q(2.0, 0.5, 2);
    const WeightSpec wn = WeightSpec::power(2, q * 0.0);
    const WeightSpec wd = WeightSpec::power(2, 2.0 * 0.5);
    const TestFunction u = product_bump({0.0, 0.5}, {0.4, 0.3});
    auto ratio = [&](const TestFunction& f) {
      const double num = norm_Lpw(f, q, wn, box).value;
      const Quadrature dq = build_quadrature(wd, box, QuadratureSpec{});
      const double den = std::pow(
          dq.integrate([&](const Point& x) { return std::pow(f.grad(x).norm(), 2.0); }),
          0.5);
      return num / den;
    };
    CHECK(ratio(u) == doctest::Approx(ratio(scaled(u, 3.0))).epsilon(1e-12));
  }
}

TEST_CASE("continuity and garding estimates for the weighted heston form") {
  const HestonWeightBundle bundle = heston_weight(heston_for_beta(1.3), 0.8);
  const OperatorSpec op = make_heston(bundle.normalized);
  const WeightSpec& ws = bundle.ws;
  const Box box = {{-1.0, 1.0}, {0.0, 1.0}};
  QuadratureSpec qs;
  qs.pts = 6;
  qs.panels = 5;
  qs.levels = 16;

  // coefficient-bound constants over a sample of the box
  const BilinearCoefficients bc = divergence_coefficients(op, ws);
  double Ka = 0, Kb = 0, Kc = 0;
  Rng srng(5);
  for (int t = 0; t < 400; ++t) {
    const Point x = pt(srng.uniform(-1, 1), srng.uniform(1e-4, 1));
    const double th = ws.theta(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.a(x));
    Ka = std::max(Ka, es.eigenvalues().maxCoeff() / th);
    Kb = std::max(Kb, bc.b(x).norm() / th);
    Kc = std::max(Kc, std::abs(bc.c(x)) / (1.0 + th));
  }
  const double C1 = Ka + Kb + Kc;  // d = 0 for heston

  Rng rng(2024);
  double worst_ratio = 0;
  double c2_star = std::numeric_limits<double>::infinity();
  std::vector<double> quad_forms, norms2, l2terms;
  const int kTrials = 200;
  for (int t = 0; t < kTrials; ++t) {
    Rng trial = rng.fork(t);
    const TestFunction u = random_fourier_field(trial, box);
    const TestFunction v = random_fourier_field(trial, box);
    const double nu = norm_H1w(u, ws, box, qs).value;
    const double nv = norm_H1w(v, ws, box, qs).value;
    const double auv = bilinear_form(op, ws, u, v, box, qs);
    worst_ratio = std::max(worst_ratio, std::abs(auv) / (nu * nv));

    const double auu = bilinear_form(op, ws, u, u, box, qs);
    quad_forms.push_back(auu);
    norms2.push_back(nu * nu);
    const Quadrature quad = build_quadrature(ws, box, qs);
    const double m = std::sqrt(quad.integrate([&](const Point& x) {
      const double uu = u.val(x);
      return (1.0 + ws.theta(x)) * uu * uu;
    }));
    l2terms.push_back(m);
    c2_star = std::min(c2_star, auu / (nu * nu));
  }
  CHECK(worst_ratio <= C1 * (1.0 + 1e-6));

  // feasible (C2, C3) with C2 > 0 over the ensemble
  double C2 = c2_star > 0 ? c2_star : 1e-3 * worst_ratio;
  double C3 = 0;
  for (int t = 0; t < kTrials; ++t) {
    if (l2terms[t] > 0) {
      C3 = std::max(C3, (C2 * norms2[t] - quad_forms[t]) / l2terms[t]);
    }
  }
  CHECK(C2 > 0);
  for (int t = 0; t < kTrials; ++t) {
    CHECK(quad_forms[t] >= C2 * norms2[t] - C3 * l2terms[t] - 1e-10);
  }
}

TEST_CASE("degeneracy sandwich: largest feasible lower-bound constant") {
  const HestonParams p = heston_for_beta(0.9);
  const OperatorSpec op = make_heston(p);
  const WeightSpec ws = WeightSpec::heston_family(2, p.beta(), 0.5, p.mu());
  Eigen::Matrix2d a1;
  a1 << 1.0, p.rho * p.sigma, p.rho * p.sigma, p.sigma * p.sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * a1);
  const double expected = es.eigenvalues().minCoeff();

  Rng rng(31);
  double feasible = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 500; ++t) {
    const Point x = pt(rng.uniform(-2, 2), rng.uniform(1e-6, 3.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(op.a(x));
    feasible = std::min(feasible, ex.eigenvalues().minCoeff() / ws.theta(x));
  }
  CHECK(feasible == doctest::Approx(expected).epsilon(1e-10));
}
